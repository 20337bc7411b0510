#pragma once

#include "ink/probe/evaluate.hpp"
#include "ink/probe/nl_compare.hpp"
#include "ink/probe/predictor.hpp"
#include "ink/probe/protocol.hpp"
#include "ink/probe/score.hpp"
#include "ink/probe/split.hpp"
