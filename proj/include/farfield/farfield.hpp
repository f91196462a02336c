// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "farfield/beamform.hpp"
#include "farfield/common.hpp"
#include "farfield/features.hpp"
#include "farfield/heatmap.hpp"
#include "farfield/masks.hpp"
#include "farfield/metrics.hpp"
#include "farfield/scene.hpp"
#include "farfield/signal.hpp"
#include "farfield/stft.hpp"
#include "farfield/tensor_io.hpp"
#include "farfield/wav.hpp"
#include "farfield/wpe.hpp"
