#pragma once

// Logistic-weighted soft K-NN classification: logistic MLE, Wald attribute
// weights, Pearson-residual case weights, inverse-distance fusion, K tuning,
// bootstrap AUC evaluation, and the scenario/variant experiment harness.

#include "lrknn/common.hpp"
#include "lrknn/csv.hpp"
#include "lrknn/dataset.hpp"
#include "lrknn/evaluation.hpp"
#include "lrknn/experiment.hpp"
#include "lrknn/linalg.hpp"
#include "lrknn/logistic.hpp"
#include "lrknn/math.hpp"
#include "lrknn/retrieval.hpp"
#include "lrknn/rng.hpp"
#include "lrknn/weighting.hpp"
