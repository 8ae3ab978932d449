#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace climadapt {

// Error taxonomy. CLI maps ConfigError/DataError to exit code 1, everything
// else to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Intervention kinds. Index 0 is DoNothing; 1..7 are the deployable measures.

enum class Kind : std::uint8_t {
  DoNothing = 0,
  BioretentionPlanters,
  Soakaway,
  StorageTank,
  PorousAsphalt,
  PerviousConcrete,
  PermeablePavers,
  GridPavers,
};

inline constexpr int kNumKinds = 8;
inline constexpr int kNumActiveKinds = 7;

inline constexpr std::array<std::string_view, kNumKinds> kKindNames = {
    "DoNothing",        "BioretentionPlanters", "Soakaway",        "StorageTank",
    "PorousAsphalt",    "PerviousConcrete",     "PermeablePavers", "GridPavers",
};

constexpr int index_of(Kind k) { return static_cast<int>(k); }
constexpr Kind kind_at(int i) { return static_cast<Kind>(i); }
constexpr std::string_view name_of(Kind k) { return kKindNames[index_of(k)]; }
std::optional<Kind> parse_kind(std::string_view name);

// ---------------------------------------------------------------------------
// Travel modes.

enum class Mode : std::uint8_t { Drive = 0, Cycle = 1, Walk = 2 };
inline constexpr int kNumModes = 3;
inline constexpr std::array<std::string_view, kNumModes> kModeNames = {"drive", "cycle", "walk"};

constexpr int index_of(Mode m) { return static_cast<int>(m); }
constexpr std::string_view name_of(Mode m) { return kModeNames[index_of(m)]; }
std::optional<Mode> parse_mode(std::string_view name);

// Bit set over modes.
struct ModeSet {
  std::uint8_t bits = 0;

  constexpr bool has(Mode m) const { return (bits >> index_of(m)) & 1U; }
  constexpr ModeSet& add(Mode m) {
    bits = static_cast<std::uint8_t>(bits | (1U << index_of(m)));
    return *this;
  }
  constexpr bool empty() const { return bits == 0; }
  friend constexpr bool operator==(ModeSet, ModeSet) = default;
};

std::string to_string(ModeSet s);           // "drive|walk"
std::optional<ModeSet> parse_mode_set(std::string_view text);

// ---------------------------------------------------------------------------
// Climate scenarios.

enum class Scenario : std::uint8_t { Rcp26 = 0, Rcp45 = 1, Rcp85 = 2 };
inline constexpr int kNumScenarios = 3;
inline constexpr std::array<std::string_view, kNumScenarios> kScenarioNames = {"RCP2.6", "RCP4.5",
                                                                               "RCP8.5"};
inline constexpr std::array<Scenario, kNumScenarios> kAllScenarios = {Scenario::Rcp26, Scenario::Rcp45,
                                                                      Scenario::Rcp85};

constexpr int index_of(Scenario s) { return static_cast<int>(s); }
constexpr std::string_view name_of(Scenario s) { return kScenarioNames[index_of(s)]; }
std::optional<Scenario> parse_scenario(std::string_view name);
// Throws ConfigError listing the valid ids.
Scenario require_scenario(std::string_view name);

// ---------------------------------------------------------------------------
// Random numbers. All stochastic components draw from a 64-bit Mersenne
// twister; uniform variates use the top 53 bits so sequences are identical
// across standard library implementations.

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive an independent stream seed from a base seed and stream tags.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ (a * 0x632be59bd9b4e019ULL)) ^ (b + 0x2545f4914f6cdd1dULL));
}

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller on the portable uniform; one variate per call.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace climadapt
