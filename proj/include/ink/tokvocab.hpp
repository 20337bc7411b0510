#pragma once

#include "ink/tokvocab/profile.hpp"
#include "ink/tokvocab/segment.hpp"
#include "ink/tokvocab/vocab.hpp"
