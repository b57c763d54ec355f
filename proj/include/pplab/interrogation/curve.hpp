/* Copyright 2026 The pplab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "pplab/csv.hpp"
#include "pplab/interrogation/interpolate.hpp"
#include "pplab/interrogation/variants.hpp"
#include "pplab/lm/perplexity.hpp"

namespace pplab::interrogation {

struct CurvePoint {
  double alpha = 0.0;
  FrequencyBand band = FrequencyBand::baseline;
  double mean_perplexity = 0.0;    // mean Px
  double mean_px_minus_po = 0.0;   // mean elevation over the baseline narrative
  std::vector<double> elevations;  // one Px - Po per (model pair, variant)
  std::size_t n() const { return elevations.size(); }
};

/// Points ordered by alpha (as given), then band severity.
struct PerturbationCurve {
  std::vector<CurvePoint> points;

  const CurvePoint& at(double alpha, FrequencyBand band) const {
    for (auto& p : points)
      if (p.alpha == alpha && p.band == band) return p;
    throw InvalidArgument("no curve point for alpha " + std::to_string(alpha) + " band " + std::string(label(band)));
  }
};

template <typename T>
struct ModelPair {
  const lm::BasicLMParameters<T>* con;
  const lm::BasicLMParameters<T>* dem;
};

/// Scores every variant narrative under alpha-interpolated models of each
/// (control, dementia) pair and averages Px - Po per (alpha, band), where Po
/// is the same model's perplexity on the baseline narrative.
template <typename T>
PerturbationCurve interrogate(std::span<const ModelPair<T>> pairs, std::span<const double> alphas,
                              std::span<const Variant> variants) {
  const Variant* base = nullptr;
  for (auto& v : variants)
    if (v.band == FrequencyBand::baseline) {
      if (base) throw InvalidArgument("more than one baseline narrative");
      base = &v;
    }
  if (!base) throw InvalidArgument("variants do not include the baseline narrative");
  if (pairs.empty()) throw InvalidArgument("no model pairs to interrogate");

  PerturbationCurve curve;
  for (double alpha : alphas) {
    const InterpolationWeight w(alpha);
    std::map<FrequencyBand, CurvePoint> points;
    for (auto band : kAllBands) points[band] = CurvePoint{alpha, band, 0.0, 0.0, {}};
    std::map<FrequencyBand, double> px_sum;
    for (const auto& pair : pairs) {
      const auto model = interpolate(*pair.dem, *pair.con, w);
      const double po = lm::perplexity(model, base->narrative);
      for (const auto& v : variants) {
        const double px = &v == base ? po : lm::perplexity(model, v.narrative);
        points[v.band].elevations.push_back(px - po);
        px_sum[v.band] += px;
      }
    }
    for (auto& [band, p] : points) {
      if (p.elevations.empty()) continue;
      double s = 0.0;
      for (double e : p.elevations) s += e;
      p.mean_px_minus_po = s / static_cast<double>(p.n());
      p.mean_perplexity = px_sum[band] / static_cast<double>(p.n());
      curve.points.push_back(std::move(p));
    }
  }
  return curve;
}

template <typename T>
PerturbationCurve interrogate(const lm::BasicLMParameters<T>& con, const lm::BasicLMParameters<T>& dem,
                              std::span<const double> alphas, std::span<const Variant> variants) {
  const ModelPair<T> pair{&con, &dem};
  return interrogate<T>(std::span<const ModelPair<T>>(&pair, 1), alphas, variants);
}

/// CSV `alpha,band,mean_px_minus_po,n`.
inline void write_curve_csv(const PerturbationCurve& curve, std::ostream& os) {
  csv::write_row(os, {"alpha", "band", "mean_px_minus_po", "n"});
  for (const auto& p : curve.points)
    csv::write_row(os, {csv::format_number(p.alpha), std::string(label(p.band)),
                        csv::format_number(p.mean_px_minus_po), std::to_string(p.n())});
}

/// CSV `alpha,band,mean_perplexity,n` (absolute perplexity per band).
inline void write_perplexity_csv(const PerturbationCurve& curve, std::ostream& os) {
  csv::write_row(os, {"alpha", "band", "mean_perplexity", "n"});
  for (const auto& p : curve.points)
    csv::write_row(os, {csv::format_number(p.alpha), std::string(label(p.band)),
                        csv::format_number(p.mean_perplexity), std::to_string(p.n())});
}

/// CSV `alpha,band,pair,px_minus_po`, one row per model pair.
inline void write_pair_curve_csv(const PerturbationCurve& curve, std::ostream& os) {
  csv::write_row(os, {"alpha", "band", "pair", "px_minus_po"});
  for (const auto& p : curve.points)
    for (std::size_t i = 0; i < p.n(); ++i)
      csv::write_row(os, {csv::format_number(p.alpha), std::string(label(p.band)), std::to_string(i),
                          csv::format_number(p.elevations[i])});
}

}  // namespace pplab::interrogation
