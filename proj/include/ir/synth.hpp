#pragma once

// Seeded synthetic datasets for demos and acceptance runs.

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>

#include "ir/dataset.hpp"
#include "ir/error.hpp"
#include "ir/rng.hpp"

namespace ir {

enum class GeneratorKind { binary_population, noisy_linear, null_association_table };

inline std::string_view to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::binary_population: return "binary_population";
    case GeneratorKind::noisy_linear: return "noisy_linear";
    case GeneratorKind::null_association_table: return "null_association_table";
  }
  return "?";
}

inline std::optional<GeneratorKind> generator_kind_from_string(std::string_view s) {
  for (auto k : {GeneratorKind::binary_population, GeneratorKind::noisy_linear,
                 GeneratorKind::null_association_table})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// Output columns:
///   binary_population       positive (boolean, true with probability p)
///   noisy_linear            x (uniform on [x_min, x_max]), y = slope*x + intercept + N(0, noise_sd)
///   null_association_table  f0000.. (boolean, true with feature_p), outcome (boolean,
///                           true with outcome_p), all mutually independent
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::binary_population;
  std::size_t size = 1000;  // rows, for every kind
  double p = 0.5;
  double slope = 1.0;
  double intercept = 0.0;
  double noise_sd = 1.0;
  double x_min = 0.0;
  double x_max = 10.0;
  std::size_t features = 10;
  double outcome_p = 0.5;
  double feature_p = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    auto prob = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError(std::string("synth: ") + name + " must lie in [0, 1]");
    };
    if (size < 1) throw ValidationError("synth: size must be at least 1");
    switch (kind) {
      case GeneratorKind::binary_population: prob(p, "p"); break;
      case GeneratorKind::noisy_linear:
        if (!(noise_sd >= 0.0)) throw ValidationError("synth: noise_sd must be non-negative");
        if (!(x_max >= x_min)) throw ValidationError("synth: x_max must be at least x_min");
        break;
      case GeneratorKind::null_association_table:
        prob(outcome_p, "outcome_p");
        prob(feature_p, "feature_p");
        if (features < 1) throw ValidationError("synth: features must be at least 1");
        break;
    }
  }
};

inline std::string feature_column_name(std::size_t j, std::size_t count) {
  std::size_t width = std::max<std::size_t>(4, std::to_string(count - 1).size());
  std::string digits = std::to_string(j);
  return "f" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

inline Dataset generate(const GeneratorSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.name = std::string(to_string(spec.kind));
  ds.rows.resize(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) ds.rows[i].row_id = i;

  switch (spec.kind) {
    case GeneratorKind::binary_population: {
      ds.schema = {{"positive", ColumnKind::boolean}};
      CounterRng rng(spec.seed, stream::kSynth);
      for (auto& r : ds.rows) r.values = {Cell{rng.bernoulli(spec.p)}};
      break;
    }
    case GeneratorKind::noisy_linear: {
      ds.schema = {{"x", ColumnKind::number}, {"y", ColumnKind::number}};
      CounterRng xs(spec.seed, stream::synth_column(0));
      CounterRng noise(spec.seed, stream::synth_column(1));
      for (auto& r : ds.rows) {
        const double x = spec.x_min + (spec.x_max - spec.x_min) * xs.uniform01();
        double y = spec.slope * x + spec.intercept;
        if (spec.noise_sd > 0) y += spec.noise_sd * noise.normal();
        r.values = {Cell{x}, Cell{y}};
      }
      break;
    }
    case GeneratorKind::null_association_table: {
      for (std::size_t j = 0; j < spec.features; ++j)
        ds.schema.push_back({feature_column_name(j, spec.features), ColumnKind::boolean});
      ds.schema.push_back({"outcome", ColumnKind::boolean});
      for (auto& r : ds.rows) r.values.reserve(spec.features + 1);
      for (std::size_t j = 0; j <= spec.features; ++j) {
        CounterRng rng(spec.seed, stream::synth_column(j));
        const double p = j < spec.features ? spec.feature_p : spec.outcome_p;
        for (auto& r : ds.rows) r.values.emplace_back(rng.bernoulli(p));
      }
      break;
    }
  }
  return ds;
}

}  // namespace ir
