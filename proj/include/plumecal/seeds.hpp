#pragma once

#include <cstdint>
#include <string_view>

namespace plumecal {

/// One round of the splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Child seed for a named purpose: splitmix64(master ^ fnv1a64(label)).
/// Labels are free-form, e.g. "design", "mcmc/tau=3", "replicate/2".
std::uint64_t child_seed(std::uint64_t master, std::string_view label) noexcept;

}  // namespace plumecal
