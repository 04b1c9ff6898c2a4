#pragma once

#include "wsgd/errors.hpp"
#include "wsgd/numerics.hpp"
#include "wsgd/io.hpp"
#include "wsgd/problem.hpp"
#include "wsgd/weighting.hpp"
#include "wsgd/sampling.hpp"
#include "wsgd/sgd.hpp"
#include "wsgd/kaczmarz.hpp"
#include "wsgd/experiments.hpp"
