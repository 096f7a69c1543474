#pragma once

// Convenience include for the whole toolkit.

#include "backbone_lens/cost.hpp"
#include "backbone_lens/error.hpp"
#include "backbone_lens/executor.hpp"
#include "backbone_lens/expand.hpp"
#include "backbone_lens/format.hpp"
#include "backbone_lens/graph.hpp"
#include "backbone_lens/metrics.hpp"
#include "backbone_lens/metrics_io.hpp"
#include "backbone_lens/model_spec.hpp"
#include "backbone_lens/presets.hpp"
#include "backbone_lens/region_text.hpp"
#include "backbone_lens/rng.hpp"
#include "backbone_lens/shapes.hpp"
#include "backbone_lens/tensor.hpp"
