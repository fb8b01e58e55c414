#pragma once

#include <stdexcept>
#include <string>

namespace dslt {

/// Argument outside the mathematical domain of an operation.
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// Hurst parameter sits exactly on an excluded critical value (2/3, 3/4,
/// (4q-3)/(4q-2)); these regimes are deliberately rejected, never computed.
struct critical_hurst_error : domain_error {
  using domain_error::domain_error;
};

/// Parameters make the requested integral divergent (detected by the exact
/// admissibility condition, not by a numerical probe).
struct divergent_integral_error : domain_error {
  using domain_error::domain_error;
};

/// Integrand is singular at an evaluation point that cannot be removed by the
/// caller's parameters (e.g. eps = 0 together with a vanishing increment).
struct singularity_error : domain_error {
  using domain_error::domain_error;
};

/// Circulant embedding produced an eigenvalue more negative than tolerance.
struct embedding_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense-factorization or other numeric backend failure.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dslt
