///
/// \file disdel.hpp
///
/// Umbrella header.
///
#ifndef DISDEL_DISDEL_HPP
#define DISDEL_DISDEL_HPP

#include "disdel/builtin_problems.hpp"
#include "disdel/dense_system.hpp"
#include "disdel/driver.hpp"
#include "disdel/error.hpp"
#include "disdel/kernel_approx.hpp"
#include "disdel/oracle.hpp"
#include "disdel/problem.hpp"
#include "disdel/radau.hpp"
#include "disdel/specfun.hpp"
#include "disdel/structured_linalg.hpp"

#endif // DISDEL_DISDEL_HPP
