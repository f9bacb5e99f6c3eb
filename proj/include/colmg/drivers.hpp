#pragma once

#include "colmg/cvar.hpp"
#include "colmg/problem.hpp"
#include "colmg/sparse_control.hpp"
