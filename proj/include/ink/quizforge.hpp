#pragma once

#include "ink/quizforge/adversarial.hpp"
#include "ink/quizforge/make.hpp"
#include "ink/quizforge/nl.hpp"
#include "ink/quizforge/quiz.hpp"
