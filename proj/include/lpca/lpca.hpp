#ifndef LPCA_LPCA_HPP
#define LPCA_LPCA_HPP

#include "lpca/core.hpp"
#include "lpca/linalg.hpp"
#include "lpca/mm_solver.hpp"
#include "lpca/fantope_solver.hpp"
#include "lpca/baselines.hpp"
#include "lpca/selection.hpp"
#include "lpca/patterned.hpp"
#include "lpca/simgen.hpp"

#endif  // LPCA_LPCA_HPP
