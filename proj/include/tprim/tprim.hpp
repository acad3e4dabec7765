// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprim/depth.hpp"
#include "tprim/dual.hpp"
#include "tprim/errors.hpp"
#include "tprim/fitting.hpp"
#include "tprim/geometry.hpp"
#include "tprim/io.hpp"
#include "tprim/losses.hpp"
#include "tprim/metrics.hpp"
#include "tprim/parallel.hpp"
#include "tprim/primitive.hpp"
#include "tprim/scene.hpp"
#include "tprim/skeleton.hpp"
#include "tprim/synthetic.hpp"
