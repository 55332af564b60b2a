// Copyright 2026 The leuda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "leuda/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

namespace leuda {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_range(const Range& r, const char* name, bool positive) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw InvalidInput(std::string("degenerate geometry range: ") + name);
  }
  if (positive && r.lo <= 0.0) {
    throw InvalidInput(std::string("geometry range must be positive: ") + name);
  }
}

double draw(std::mt19937_64& rng, const Range& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

struct Point {
  double y;
  double x;
};

// One subject's geometry; lengths are fractions of the image size.
struct SubjectGeometry {
  Point centroid;  // canvas pixels
  double body_ax, body_ay;
  double lv_ax, lv_ay, myo_t;
  double la_ax, la_ay;
  double ao_r;
  double theta;  // radians
  std::array<double, 3> tex_freq, tex_dir, tex_phase;
  double bias_dir;
};

SubjectGeometry draw_geometry(const PhantomSpec& spec, std::mt19937_64& rng) {
  const GeometryRanges& g = spec.geometry;
  const double canvas = spec.image_size + 2.0 * spec.canvas_margin;
  SubjectGeometry geo{};
  geo.centroid = {canvas / 2.0 + draw(rng, g.centroid_jitter) * spec.image_size,
                  canvas / 2.0 + draw(rng, g.centroid_jitter) * spec.image_size};
  geo.body_ax = draw(rng, g.body_axes[0]);
  geo.body_ay = draw(rng, g.body_axes[1]);
  geo.lv_ax = draw(rng, g.ventricle_axes[0]);
  geo.lv_ay = draw(rng, g.ventricle_axes[1]);
  geo.myo_t = draw(rng, g.myocardium_thickness);
  geo.la_ax = draw(rng, g.atrium_axes[0]);
  geo.la_ay = draw(rng, g.atrium_axes[1]);
  geo.ao_r = draw(rng, g.aorta_radius);
  geo.theta = draw(rng, g.rotation_degrees) * kDegToRad;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    geo.tex_freq[k] = 1.0 + 2.0 * unit(rng);
    geo.tex_dir[k] = 2.0 * std::numbers::pi * unit(rng);
    geo.tex_phase[k] = 2.0 * std::numbers::pi * unit(rng);
  }
  geo.bias_dir = 2.0 * std::numbers::pi * unit(rng);
  return geo;
}

bool inside_ellipse(Point p, Point center, double ax, double ay) {
  const double dx = (p.x - center.x) / ax;
  const double dy = (p.y - center.y) / ay;
  return dx * dx + dy * dy <= 1.0;
}

// Renders one canvas slice; returns (intensity, labels).
std::pair<Grid2D<float>, Grid2D<std::uint8_t>> render_slice(
    const PhantomSpec& spec, const SubjectGeometry& geo,
    const ModalityAppearance& look, int z, std::mt19937_64& rng) {
  const int canvas = spec.image_size + 2 * spec.canvas_margin;
  const double size = spec.image_size;
  const double u = (z + 0.5) / spec.slices_per_subject;
  const double heart_scale = 0.55 + 0.45 * std::sin(std::numbers::pi * u);
  const double atrium_scale = 0.4 + 0.6 * u;
  const double aorta_scale = 0.9 + 0.2 * u;

  const Point lv_center{0.06, 0.04};
  const Point la_center{-0.13, -0.10};
  const Point ao_center{-0.20 - 0.04 * (u - 0.5), 0.12};
  const double c = std::cos(geo.theta);
  const double s = std::sin(geo.theta);

  Grid2D<float> image(canvas, canvas);
  Grid2D<std::uint8_t> labels(canvas, canvas);
  std::normal_distribution<double> noise(0.0, 1.0);

  for (int y = 0; y < canvas; ++y) {
    for (int x = 0; x < canvas; ++x) {
      const double ry = (y + 0.5 - geo.centroid.y) / size;
      const double rx = (x + 0.5 - geo.centroid.x) / size;
      // Structure frame: rotate by -theta about the centroid.
      const Point p{-s * rx + c * ry, c * rx + s * ry};
      bool in_body = inside_ellipse({ry, rx}, {0.0, 0.0}, geo.body_ax, geo.body_ay);
      int label = 0;
      if (in_body) {
        if (inside_ellipse(p, la_center, geo.la_ax * atrium_scale,
                           geo.la_ay * atrium_scale)) {
          label = 3;
        }
        if (inside_ellipse(p, ao_center, geo.ao_r * aorta_scale,
                           geo.ao_r * aorta_scale)) {
          label = 4;
        }
        const double lv_ax = geo.lv_ax * heart_scale;
        const double lv_ay = geo.lv_ay * heart_scale;
        if (inside_ellipse(p, lv_center, lv_ax + geo.myo_t, lv_ay + geo.myo_t)) {
          label = 1;
        }
        if (inside_ellipse(p, lv_center, lv_ax, lv_ay)) label = 2;
      }
      double value = look.air;
      if (in_body) {
        value = look.tissue_intensity(label);
        double texture = 0.0;
        for (int k = 0; k < 3; ++k) {
          texture += std::sin(2.0 * std::numbers::pi * geo.tex_freq[k] *
                                  (rx * std::cos(geo.tex_dir[k]) +
                                   ry * std::sin(geo.tex_dir[k])) +
                              geo.tex_phase[k]);
        }
        value += look.texture_amplitude * texture / 3.0;
      }
      const double nx = 2.0 * (x + 0.5) / canvas - 1.0;
      const double ny = 2.0 * (y + 0.5) / canvas - 1.0;
      const double bias =
          1.0 + look.bias_amplitude * (nx * std::cos(geo.bias_dir) + ny * std::sin(geo.bias_dir));
      value = value * bias + look.noise_sigma * noise(rng);
      image.at(y, x) = static_cast<float>(value);
      labels.at(y, x) = static_cast<std::uint8_t>(label);
    }
  }
  return {std::move(image), std::move(labels)};
}

std::vector<Subject> render_modality(const PhantomSpec& spec,
                                     const ModalityAppearance& look, Domain domain,
                                     const std::string& modality, std::uint64_t stream) {
  std::vector<Subject> subjects;
  subjects.reserve(spec.n_subjects);
  for (int i = 0; i < spec.n_subjects; ++i) {
    std::mt19937_64 rng(derive_seed(spec.seed, stream, static_cast<std::uint64_t>(i)));
    const SubjectGeometry geo = draw_geometry(spec, rng);
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%03d", modality.c_str(), i);

    Subject subject;
    subject.id = id;
    subject.domain = domain;
    subject.modality = modality;
    subject.spacing = {spec.slice_spacing, 1.0, 1.0};
    subject.masks.emplace();
    const auto center = std::make_pair(geo.centroid.y, geo.centroid.x);
    for (int z = 0; z < spec.slices_per_subject; ++z) {
      auto [image, labels] = render_slice(spec, geo, look, z, rng);
      ImageTensor slice;
      slice.pixels = crop_center(image, spec.image_size, center);
      slice.kind = domain == Domain::kSource ? ImageKind::kS : ImageKind::kT;
      slice.slice_id = subject.id + "/z" + std::to_string(z);
      subject.slices.push_back(std::move(slice));
      subject.masks->push_back(SegMask{crop_center(labels, spec.image_size, center)});
    }
    normalize_subject(subject);
    subjects.push_back(std::move(subject));
  }
  return subjects;
}

}  // namespace

void GeometryRanges::validate() const {
  check_range(body_axes[0], "body_axes[0]", true);
  check_range(body_axes[1], "body_axes[1]", true);
  check_range(centroid_jitter, "centroid_jitter", false);
  check_range(ventricle_axes[0], "ventricle_axes[0]", true);
  check_range(ventricle_axes[1], "ventricle_axes[1]", true);
  check_range(myocardium_thickness, "myocardium_thickness", true);
  check_range(atrium_axes[0], "atrium_axes[0]", true);
  check_range(atrium_axes[1], "atrium_axes[1]", true);
  check_range(aorta_radius, "aorta_radius", true);
  check_range(rotation_degrees, "rotation_degrees", false);
  if (body_axes[0].hi > 0.5 || body_axes[1].hi > 0.5) {
    throw InvalidInput("body axes must fit inside the crop window");
  }
  if (ventricle_axes[0].hi + myocardium_thickness.hi > body_axes[0].lo ||
      ventricle_axes[1].hi + myocardium_thickness.hi > body_axes[1].lo) {
    throw InvalidInput("myocardium must fit inside the body");
  }
}

float ModalityAppearance::tissue_intensity(int label) const {
  double v = std::pow(static_cast<double>(class_intensity.at(label)), gamma);
  if (invert) v = 1.0 - v;
  return static_cast<float>(v);
}

void PhantomSpec::validate() const {
  if (n_subjects <= 0) throw InvalidInput("n_subjects must be positive");
  if (slices_per_subject <= 0) throw InvalidInput("slices_per_subject must be positive");
  if (image_size < 8) throw InvalidInput("image_size must be at least 8");
  if (canvas_margin < 0) throw InvalidInput("canvas_margin must be non-negative");
  if (std::abs(geometry.centroid_jitter.lo) * image_size > canvas_margin ||
      std::abs(geometry.centroid_jitter.hi) * image_size > canvas_margin) {
    throw InvalidInput("centroid jitter exceeds the canvas margin");
  }
  if (slice_spacing <= 0.0) throw InvalidInput("slice_spacing must be positive");
  geometry.validate();
  for (const auto* look : {&source_appearance, &target_appearance}) {
    if (look->gamma <= 0.0) throw InvalidInput("appearance gamma must be positive");
    if (look->noise_sigma < 0.0 || look->texture_amplitude < 0.0 ||
        look->bias_amplitude < 0.0 || look->bias_amplitude >= 1.0) {
      throw InvalidInput("appearance amplitudes out of range");
    }
  }
}

PhantomDataset generate_phantoms(const PhantomSpec& spec) {
  spec.validate();
  PhantomDataset out;
  out.source = render_modality(spec, spec.source_appearance, Domain::kSource, "A", 1);
  out.target = render_modality(spec, spec.target_appearance, Domain::kTarget, "B", 2);

  if (spec.min_intensity_gap > 0.0) {
    const auto a = mean_label_intensity(out.source);
    const auto b = mean_label_intensity(out.target);
    double gap = 0.0;
    int counted = 0;
    for (int c = 0; c < kDefaultNumClasses; ++c) {
      if (std::isnan(a[c]) || std::isnan(b[c])) continue;
      gap += std::abs(a[c] - b[c]);
      ++counted;
    }
    gap = counted > 0 ? gap / counted : 0.0;
    if (gap < spec.min_intensity_gap) {
      throw InvalidInput("modality appearances differ by " + std::to_string(gap) +
                         ", below min_intensity_gap");
    }
  }
  return out;
}

PhantomDataset swap_domains(PhantomDataset dataset) {
  std::swap(dataset.source, dataset.target);
  auto relabel = [](std::vector<Subject>& subjects, Domain domain, ImageKind kind) {
    for (auto& subject : subjects) {
      subject.domain = domain;
      for (auto& slice : subject.slices) slice.kind = kind;
    }
  };
  relabel(dataset.source, Domain::kSource, ImageKind::kS);
  relabel(dataset.target, Domain::kTarget, ImageKind::kT);
  return dataset;
}

std::array<double, kDefaultNumClasses> mean_label_intensity(
    std::span<const Subject> subjects) {
  std::array<double, kDefaultNumClasses> sum{};
  std::array<std::size_t, kDefaultNumClasses> count{};
  for (const auto& subject : subjects) {
    if (!subject.masks) continue;
    for (std::size_t i = 0; i < subject.slices.size(); ++i) {
      const auto& pixels = subject.slices[i].pixels.values;
      const auto& labels = (*subject.masks)[i].labels.values;
      for (std::size_t p = 0; p < pixels.size(); ++p) {
        if (labels[p] < kDefaultNumClasses) {
          sum[labels[p]] += pixels[p];
          ++count[labels[p]];
        }
      }
    }
  }
  std::array<double, kDefaultNumClasses> mean{};
  for (int c = 0; c < kDefaultNumClasses; ++c) {
    mean[c] = count[c] > 0 ? sum[c] / static_cast<double>(count[c])
                           : std::numeric_limits<double>::quiet_NaN();
  }
  return mean;
}

std::vector<float> zscore_normalize(std::span<const float> volume) {
  if (volume.empty()) throw InvalidInput("zscore_normalize: empty volume");
  double mean = 0.0;
  for (float v : volume) mean += v;
  mean /= static_cast<double>(volume.size());
  double var = 0.0;
  for (float v : volume) var += (v - mean) * (v - mean);
  var /= static_cast<double>(volume.size());
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    throw InvalidInput("zscore_normalize: zero-variance volume");
  }
  std::vector<float> out(volume.size());
  for (std::size_t i = 0; i < volume.size(); ++i) {
    out[i] = static_cast<float>((volume[i] - mean) / sd);
  }
  return out;
}

void normalize_subject(Subject& subject) {
  std::vector<float> volume;
  for (const auto& slice : subject.slices) {
    volume.insert(volume.end(), slice.pixels.values.begin(), slice.pixels.values.end());
  }
  const std::vector<float> normalized = zscore_normalize(volume);
  std::size_t offset = 0;
  for (auto& slice : subject.slices) {
    std::copy_n(normalized.begin() + static_cast<std::ptrdiff_t>(offset),
                slice.pixels.size(), slice.pixels.values.begin());
    offset += slice.pixels.size();
  }
}

template <typename T>
Grid2D<T> crop_center(const Grid2D<T>& grid, int out_size,
                      std::optional<std::pair<double, double>> center) {
  if (out_size <= 0 || out_size > grid.height || out_size > grid.width) {
    throw InvalidInput("crop_center: out_size " + std::to_string(out_size) +
                       " does not fit a " + std::to_string(grid.height) + "x" +
                       std::to_string(grid.width) + " grid");
  }
  const auto [cy, cx] =
      center.value_or(std::make_pair(grid.height / 2.0, grid.width / 2.0));
  const int top = std::clamp(static_cast<int>(std::lround(cy - out_size / 2.0)), 0,
                             grid.height - out_size);
  const int left = std::clamp(static_cast<int>(std::lround(cx - out_size / 2.0)), 0,
                              grid.width - out_size);
  Grid2D<T> out(out_size, out_size);
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) out.at(y, x) = grid.at(top + y, left + x);
  }
  return out;
}

template Grid2D<float> crop_center(const Grid2D<float>&, int,
                                   std::optional<std::pair<double, double>>);
template Grid2D<std::uint8_t> crop_center(const Grid2D<std::uint8_t>&, int,
                                          std::optional<std::pair<double, double>>);

AffineTransform AffineTransform::compose(double rotation_degrees, double scale,
                                         double shear_degrees) {
  const double t = rotation_degrees * kDegToRad;
  const double k = std::tan(shear_degrees * kDegToRad);
  const double c = std::cos(t);
  const double s = std::sin(t);
  // R(t) * Shear(k) * scale, with Shear = [[1, k], [0, 1]].
  AffineTransform m;
  m.a00 = scale * c;
  m.a01 = scale * (c * k - s);
  m.a10 = scale * s;
  m.a11 = scale * (s * k + c);
  return m;
}

AffineTransform sample_transform(const AugmentParams& params, std::uint64_t seed) {
  if (params.is_identity()) return {};
  std::mt19937_64 rng(mix_seed(seed));
  const double rot = draw(rng, {-params.rotation_degrees, params.rotation_degrees});
  const double scale = draw(rng, {params.scale_min, params.scale_max});
  const double shear = draw(rng, {-params.shear_degrees, params.shear_degrees});
  return AffineTransform::compose(rot, scale, shear);
}

std::pair<ImageTensor, SegMask> apply_transform(const ImageTensor& image,
                                                const SegMask& mask,
                                                const AffineTransform& m) {
  if (image.height() != mask.height() || image.width() != mask.width()) {
    throw InvalidInput("apply_transform: image and mask are not aligned");
  }
  if (m.is_identity()) return {image, mask};
  const double det = m.a00 * m.a11 - m.a01 * m.a10;
  if (std::abs(det) < 1e-12) throw InvalidInput("apply_transform: singular transform");
  // Inverse map: output pixel -> input location.
  const double i00 = m.a11 / det, i01 = -m.a01 / det;
  const double i10 = -m.a10 / det, i11 = m.a00 / det;

  const int h = image.height();
  const int w = image.width();
  const double cy = (h - 1) / 2.0;
  const double cx = (w - 1) / 2.0;
  ImageTensor out_image = image;
  SegMask out_mask = mask;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = std::clamp(i00 * dx + i01 * dy + cx, 0.0, w - 1.0);
      const double sy = std::clamp(i10 * dx + i11 * dy + cy, 0.0, h - 1.0);

      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const auto& px = image.pixels;
      const double top = px.at(y0, x0) * (1.0 - fx) + px.at(y0, x1) * fx;
      const double bottom = px.at(y1, x0) * (1.0 - fx) + px.at(y1, x1) * fx;
      out_image.pixels.at(y, x) = static_cast<float>(top * (1.0 - fy) + bottom * fy);

      const int nx = std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1);
      const int ny = std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1);
      out_mask.labels.at(y, x) = mask.labels.at(ny, nx);
    }
  }
  return {std::move(out_image), std::move(out_mask)};
}

ImageTensor apply_transform(const ImageTensor& image, const AffineTransform& transform) {
  if (transform.is_identity()) return image;
  const SegMask blank{Grid2D<std::uint8_t>(image.height(), image.width())};
  return apply_transform(image, blank, transform).first;
}

std::pair<ImageTensor, SegMask> augment(const ImageTensor& image, const SegMask& mask,
                                        const AugmentParams& params,
                                        std::uint64_t seed) {
  return apply_transform(image, mask, sample_transform(params, seed));
}

ImageTensor perturb(const ImageTensor& image, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidInput("perturb: sigma must be non-negative");
  ImageTensor out = image;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(mix_seed(seed));
  std::normal_distribution<double> noise(0.0, sigma);
  for (float& v : out.pixels.values) v = static_cast<float>(v + noise(rng));
  return out;
}

}  // namespace leuda
