#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nonrev {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class DomainKind { full_space, torus };

struct Domain {
  DomainKind kind = DomainKind::full_space;
  Vec periods;  // one entry per axis, torus only

  static Domain full_space() { return {}; }
  static Domain torus(Vec periods);

  bool is_torus() const { return kind == DomainKind::torus; }
  // Maps x componentwise into [0, period).
  void wrap(Vec& x) const;
};

/// An energy U on R^d or on a torus; the target density is exp(-U)/Z.
///
/// Gradient is mandatory. Laplacian and Hessian are optional; built-in
/// potentials provide both exactly. Instances are immutable and may be
/// shared across threads.
class Potential {
 public:
  using Energy = std::function<double(const Vec&)>;
  using Gradient = std::function<void(const Vec&, Vec&)>;
  using Laplacian = std::function<double(const Vec&)>;
  using Hessian = std::function<void(const Vec&, Mat&)>;

  struct Callbacks {
    Energy energy;
    Gradient gradient;
    Laplacian laplacian;  // may be empty
    Hessian hessian;      // may be empty
  };

  // Extra structure some consumers exploit (exact OU analysis, uniform
  // stream-function fluxes on the torus).
  struct Traits {
    std::optional<Mat> gaussian_matrix;  // D with U = -x'Dx/2
    bool uniform = false;                // U is constant
  };

  Potential(int dim, Domain domain, std::string label, Callbacks callbacks);
  Potential(int dim, Domain domain, std::string label, Callbacks callbacks, Traits traits);

  int dim() const { return dim_; }
  const Domain& domain() const { return domain_; }
  const std::string& label() const { return label_; }
  const Traits& traits() const { return traits_; }

  double energy(const Vec& x) const { return callbacks_.energy(x); }
  void gradient(const Vec& x, Vec& out) const { callbacks_.gradient(x, out); }
  Vec gradient(const Vec& x) const;

  bool has_laplacian() const { return static_cast<bool>(callbacks_.laplacian); }
  double laplacian(const Vec& x) const;

  bool has_hessian() const { return static_cast<bool>(callbacks_.hessian); }
  void hessian(const Vec& x, Mat& out) const;
  Mat hessian(const Vec& x) const;

 private:
  int dim_;
  Domain domain_;
  std::string label_;
  Callbacks callbacks_;
  Traits traits_;
};

/// Checks that `d` is symmetric (to 1e-12) with all eigenvalues negative and
/// returns its exactly symmetrized copy. Throws InvalidArgument otherwise.
Mat validate_negative_definite(const Mat& d);

/// U(x) = -x'Dx/2 for symmetric negative-definite D; exp(-U) is N(0, -D^-1).
Potential potential_gaussian(const Mat& d);

/// U(x) = a (x^2 - 1)^2 in one dimension.
Potential potential_double_well(double a);

/// U(x, y) = a (x^2 - 1)^2 + y^2 / 2, the double well lifted to the plane.
Potential potential_double_well_2d(double a);

struct CosineTerm {
  int k1 = 0;
  int k2 = 0;
  double amplitude = 0.0;
};

/// U(x) = sum amplitude * cos(k . x) on the 2-torus of period 2 pi.
/// An empty list gives the uniform density.
Potential potential_torus(std::vector<CosineTerm> terms);

/// Samples of 1/2 |grad U|^2 - Laplacian U on spheres of growing radius.
struct ConfinementReport {
  std::vector<double> radii;
  std::vector<double> values;
  bool diverges = false;
};

struct ConfinementOptions {
  double growth_factor = 10.0;
  std::uint64_t seed = 0x5eed;
};

ConfinementReport check_confinement(const Potential& p, double r_max, int n_radii,
                                    int n_directions, ConfinementOptions options = {});

/// Max over points and components of |central difference of U - grad U|.
double grad_check(const Potential& p, std::span<const Vec> points, double h_fd);

}  // namespace nonrev
