#pragma once

#include "kmland/classify.hpp"
#include "kmland/constructions.hpp"
#include "kmland/errors.hpp"
#include "kmland/estimator.hpp"
#include "kmland/geometry.hpp"
#include "kmland/linalg.hpp"
#include "kmland/lloyd.hpp"
#include "kmland/model.hpp"
#include "kmland/objective.hpp"
#include "kmland/random.hpp"
#include "kmland/verify.hpp"
