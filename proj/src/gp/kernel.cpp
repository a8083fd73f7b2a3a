#include <cmath>

#include "plumecal/errors.hpp"
#include "plumecal/gp.hpp"

namespace plumecal {

std::string to_string(KernelFamily family)
{
    switch (family) {
    case KernelFamily::exponential: return "exponential";
    case KernelFamily::squared_exponential: return "squared_exponential";
    case KernelFamily::matern32: return "matern32";
    case KernelFamily::matern52: return "matern52";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name)
{
    for (auto f : kAllKernelFamilies)
        if (to_string(f) == name) return f;
    throw ConfigError("unknown kernel family '" + name +
                      "' (expected exponential, squared_exponential, matern32 or matern52)");
}

double Kernel::operator()(double s) const
{
    switch (family) {
    case KernelFamily::exponential: return r1 * std::exp(-s / r2);
    case KernelFamily::squared_exponential: return r1 * std::exp(-s * s / (2.0 * r2));
    case KernelFamily::matern32: {
        const double a = std::sqrt(3.0) * s / r2;
        return r1 * (1.0 + a) * std::exp(-a);
    }
    case KernelFamily::matern52: {
        const double a = std::sqrt(5.0) * s / r2;
        const double b = s / r2;
        return r1 * (1.0 + a + 5.0 / 3.0 * b * b) * std::exp(-a);
    }
    }
    return 0.0;
}

double kernel_eval(const Kernel& kernel, double s)
{
    PLUMECAL_REQUIRE(s >= 0, "kernel_eval: distance must be >= 0");
    return kernel(s);
}

}  // namespace plumecal
