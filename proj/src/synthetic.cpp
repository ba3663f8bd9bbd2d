#include <cmath>
#include <numbers>
#include <random>

#include "tsacl/dataset.hpp"
#include "tsacl/error.hpp"

namespace tsacl::data {

namespace {

constexpr int kTemplateComponents = 3;
constexpr int kSubjectComponents = 2;

struct Sinusoid {
  double amplitude;
  double cycles;  // full periods across the series length
  double phase;
};

void add_sinusoids(std::span<const Sinusoid> parts, double scale, std::span<double> out) {
  const double n = static_cast<double>(out.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    double v = 0.0;
    for (const auto& p : parts) {
      v += p.amplitude * std::sin(2.0 * std::numbers::pi * p.cycles * static_cast<double>(t) / n +
                                  p.phase);
    }
    out[t] += scale * v;
  }
}

// signals[(c * channels + ch) * length + t]
std::vector<double> class_templates(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.template_seed);
  std::uniform_real_distribution<double> amplitude(0.5, 1.0);
  std::uniform_real_distribution<double> cycles(1.0, 8.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> out(spec.num_classes * spec.channels * spec.length, 0.0);
  for (std::size_t row = 0; row < spec.num_classes * spec.channels; ++row) {
    Sinusoid parts[kTemplateComponents];
    for (auto& p : parts) p = {amplitude(rng), cycles(rng), phase(rng)};
    add_sinusoids(parts, 1.0, std::span<double>(out).subspan(row * spec.length, spec.length));
  }
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  require(num_classes > 0 && subjects_per_class > 0 && samples_per_subject > 0 &&
              test_samples_per_subject > 0 && channels > 0 && length > 0,
          ErrorCode::kInvalidArgument, "synthetic spec: all counts must be positive");
  require(std::isfinite(subject_scale) && subject_scale >= 0.0, ErrorCode::kInvalidArgument,
          "synthetic spec: subject_scale must be non-negative");
  require(std::isfinite(noise_scale) && noise_scale >= 0.0, ErrorCode::kInvalidArgument,
          "synthetic spec: noise_scale must be non-negative");
}

DatasetPair generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t row = spec.channels * spec.length;
  const auto templates = class_templates(spec);

  // One low-frequency offset signal per (class, subject), shared by both splits.
  std::mt19937_64 subject_rng(spec.seed);
  std::uniform_real_distribution<double> cycles(0.25, 1.5);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t populations = spec.num_classes * spec.subjects_per_class;
  std::vector<double> offsets(populations * row, 0.0);
  for (std::size_t r = 0; r < populations * spec.channels; ++r) {
    Sinusoid parts[kSubjectComponents];
    for (auto& p : parts) p = {gauss(subject_rng) / std::numbers::sqrt2, cycles(subject_rng), phase(subject_rng)};
    add_sinusoids(parts, spec.subject_scale,
                  std::span<double>(offsets).subspan(r * spec.length, spec.length));
  }

  std::mt19937_64 noise_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto make_split = [&](std::size_t per_subject, Split split) {
    const std::size_t n = populations * per_subject;
    std::vector<float> samples;
    samples.reserve(n * row);
    std::vector<std::uint32_t> labels;
    labels.reserve(n);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      for (std::size_t s = 0; s < spec.subjects_per_class; ++s) {
        const double* tmpl = templates.data() + c * row;
        const double* off = offsets.data() + (c * spec.subjects_per_class + s) * row;
        for (std::size_t k = 0; k < per_subject; ++k) {
          for (std::size_t j = 0; j < row; ++j) {
            samples.push_back(
                static_cast<float>(tmpl[j] + off[j] + spec.noise_scale * gauss(noise_rng)));
          }
          labels.push_back(static_cast<std::uint32_t>(c));
        }
      }
    }
    return TimeSeriesDataset(std::move(samples), std::move(labels), spec.channels, spec.length,
                             spec.num_classes, split);
  };

  DatasetPair pair;
  pair.train = make_split(spec.samples_per_subject, Split::kTrain);
  pair.test = make_split(spec.test_samples_per_subject, Split::kTest);
  return pair;
}

std::vector<std::size_t> synthetic_subject_ids(const SyntheticSpec& spec, Split split) {
  const std::size_t per_subject =
      split == Split::kTrain ? spec.samples_per_subject : spec.test_samples_per_subject;
  std::vector<std::size_t> ids;
  ids.reserve(spec.num_classes * spec.subjects_per_class * per_subject);
  for (std::size_t c = 0; c < spec.num_classes; ++c)
    for (std::size_t s = 0; s < spec.subjects_per_class; ++s)
      for (std::size_t k = 0; k < per_subject; ++k) ids.push_back(s);
  return ids;
}

}  // namespace tsacl::data
