#pragma once

// Targeted-indicator discovery for messy tabular survey data: impute ->
// select -> classify extremes -> explain each instance locally -> cluster the
// explanations -> characterize each cluster with a sparse linear model.

#include "explika/cluster.hpp"
#include "explika/errors.hpp"
#include "explika/impute.hpp"
#include "explika/learn.hpp"
#include "explika/lime.hpp"
#include "explika/pipeline.hpp"
#include "explika/select.hpp"
#include "explika/synthetic.hpp"
#include "explika/table.hpp"
