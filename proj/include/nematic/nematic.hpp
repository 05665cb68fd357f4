#pragma once

#include "axisym.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "lbfgs.hpp"
#include "profile.hpp"
#include "qtensor.hpp"
#include "trial.hpp"
