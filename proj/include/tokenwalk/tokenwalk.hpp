#pragma once

#include "tokenwalk/covariance.hpp"
#include "tokenwalk/engine.hpp"
#include "tokenwalk/error.hpp"
#include "tokenwalk/graph.hpp"
#include "tokenwalk/harness.hpp"
#include "tokenwalk/kernels.hpp"
#include "tokenwalk/lyapunov.hpp"
#include "tokenwalk/objectives.hpp"
#include "tokenwalk/random.hpp"
#include "tokenwalk/spectral.hpp"
