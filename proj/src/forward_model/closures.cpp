#include <algorithm>
#include <cmath>
#include <string>

#include "plumecal/errors.hpp"
#include "plumecal/forward_model.hpp"

namespace plumecal {

void ModelParams::validate() const
{
    const bool finite = std::isfinite(p) && std::isfinite(z0) && std::isfinite(L) &&
                        std::isfinite(z_i) && std::isfinite(z_cut) && std::isfinite(kappa);
    if (!finite) throw ContractViolation("model parameters must be finite");
    if (!(z0 > 0)) throw ContractViolation("roughness length z0 must be > 0");
    // The horizontal correlation needs -L > 0; stable conditions are not supported.
    if (!(L < 0)) throw ContractViolation("Monin-Obukhov length L must be < 0");
    if (!(z_i > 0)) throw ContractViolation("mixing layer height z_i must be > 0");
    if (!(z_cut > 0 && z_cut < z_i))
        throw ContractViolation("cut-off height must satisfy 0 < z_cut < z_i");
    if (!(kappa > 0)) throw ContractViolation("von Karman constant must be > 0");
}

bool ModelParams::in_reference_ranges() const
{
    return p >= 0 && p <= 0.6 && z0 > 0 && z0 <= 3 && L >= -600 && L < 0;
}

double wind_profile(const ModelParams& params, double z, double v_r, double z_ref)
{
    if (!std::isfinite(z) || !std::isfinite(v_r) || !std::isfinite(z_ref) || !std::isfinite(params.p))
        throw ContractViolation("wind_profile: non-finite input");
    PLUMECAL_REQUIRE(z >= 0 && v_r >= 0 && z_ref > 0, "wind_profile: need z >= 0, v_r >= 0, z_ref > 0");
    const double ze = std::max(z, params.z_cut);
    return v_r * std::pow(ze / z_ref, params.p);
}

double stability_phi(double s)
{
    if (s >= 0) return 1.0 + 4.7 * s;
    return 1.0 / std::sqrt(1.0 - 15.0 * s);
}

double friction_velocity(const ModelParams& params, double v_r, double z_ref)
{
    PLUMECAL_REQUIRE(params.z0 > 0, "friction_velocity: z0 must be > 0");
    if (!(z_ref > params.z0))
        throw ContractViolation("friction_velocity: z_ref (" + std::to_string(z_ref) +
                                ") must exceed z0 (" + std::to_string(params.z0) + ")");
    return params.kappa * v_r / std::log(z_ref / params.z0);
}

Diffusivities eddy_diffusivities(const ModelParams& params, double z, double v_r, double z_ref)
{
    PLUMECAL_REQUIRE(std::isfinite(z) && std::isfinite(v_r), "eddy_diffusivities: non-finite input");
    PLUMECAL_REQUIRE(z >= 0 && v_r >= 0, "eddy_diffusivities: need z >= 0, v_r >= 0");
    if (!(params.L < 0))
        throw ContractViolation("eddy_diffusivities: L must be < 0 for the horizontal correlation");
    const double v_star = friction_velocity(params, v_r, z_ref);
    const double ze = std::max(z, params.z_cut);
    Diffusivities d;
    d.vertical = params.kappa * v_star * ze / stability_phi(ze / params.L);
    d.horizontal = v_star * std::pow(params.z_i, 0.75) * std::cbrt(1.0 / (-params.kappa * params.L)) / 10.0;
    return d;
}

}  // namespace plumecal
