#pragma once

// Umbrella header: the full library surface.

#include "sce/anomaly.hpp"
#include "sce/csv.hpp"
#include "sce/errors.hpp"
#include "sce/features.hpp"
#include "sce/frame_io.hpp"
#include "sce/generate.hpp"
#include "sce/gradcheck.hpp"
#include "sce/image.hpp"
#include "sce/manifest.hpp"
#include "sce/model_config.hpp"
#include "sce/models.hpp"
#include "sce/nn.hpp"
#include "sce/optim.hpp"
#include "sce/render.hpp"
#include "sce/rng.hpp"
#include "sce/serialize.hpp"
#include "sce/solver.hpp"
#include "sce/stats.hpp"
#include "sce/svg.hpp"
#include "sce/tensor.hpp"
#include "sce/threads.hpp"
