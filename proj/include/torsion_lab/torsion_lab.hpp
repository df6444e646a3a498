#pragma once

#include "acceptance.hpp"
#include "birth_death.hpp"
#include "core.hpp"
#include "experiments.hpp"
#include "graded_complex.hpp"
#include "io.hpp"
#include "morse_complex.hpp"
#include "ode.hpp"
#include "profiles.hpp"
#include "superalgebra.hpp"
#include "torsion_forms.hpp"
#include "witten1d.hpp"

namespace tlab {

inline constexpr const char* version = "0.1.0";

}  // namespace tlab
