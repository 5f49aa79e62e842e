#pragma once

#include "mineseek/boxqp.hpp"
#include "mineseek/brsolve.hpp"
#include "mineseek/errors.hpp"
#include "mineseek/game.hpp"
#include "mineseek/icrf.hpp"
#include "mineseek/io.hpp"
#include "mineseek/random.hpp"
#include "mineseek/seek.hpp"
#include "mineseek/verify.hpp"
