#pragma once

#include "permlab/dense_matrix.hpp"
#include "permlab/distribution.hpp"
#include "permlab/errors.hpp"
#include "permlab/experiments.hpp"
#include "permlab/model.hpp"
#include "permlab/model_spec.hpp"
#include "permlab/moments.hpp"
#include "permlab/permanent.hpp"
#include "permlab/rng.hpp"
#include "permlab/scaled_value.hpp"
#include "permlab/verify.hpp"
