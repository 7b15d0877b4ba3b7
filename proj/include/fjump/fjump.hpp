#pragma once

#include "fjump/analytic.hpp"
#include "fjump/config.hpp"
#include "fjump/constants.hpp"
#include "fjump/covariance.hpp"
#include "fjump/dsp.hpp"
#include "fjump/dynamics.hpp"
#include "fjump/errors.hpp"
#include "fjump/floquet.hpp"
#include "fjump/params.hpp"
#include "fjump/rng.hpp"
#include "fjump/runner.hpp"
#include "fjump/stats.hpp"
#include "fjump/verify.hpp"
