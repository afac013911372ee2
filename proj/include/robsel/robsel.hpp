#pragma once

#include "robsel/asymptotics.hpp"
#include "robsel/baselines.hpp"
#include "robsel/config.hpp"
#include "robsel/errors.hpp"
#include "robsel/harness.hpp"
#include "robsel/policy.hpp"
#include "robsel/problem.hpp"
#include "robsel/rng.hpp"
#include "robsel/vfa_policy.hpp"
