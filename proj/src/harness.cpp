#include "confbox/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <boost/math/distributions/normal.hpp>
#include <Eigen/Cholesky>

#include "confbox/label_sets.hpp"
#include "confbox/matching.hpp"
#include "confbox/rng.hpp"
#include "json.hpp"

namespace confbox::harness {

using nlohmann::json;

namespace {

Vector effective_or_ones(const Vector& v, int n) {
  if (v.size() == 0) return Vector::Ones(n);
  return v;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void SimulationSpec::validate() const {
  require(num_classes >= 1, "num_classes must be at least 1");
  require(num_images >= 2, "num_images must be at least 2 to split");
  require(objects_per_image.min >= 0, "objects_per_image.min must be >= 0");
  require(objects_per_image.max >= std::max(1, objects_per_image.min),
          "objects_per_image.max must be >= max(1, min)");
  if (class_weights.size() != 0) {
    require(class_weights.size() == num_classes,
            "class_weights must have one entry per class");
    require((class_weights.array() >= 0).all() && class_weights.sum() > 0,
            "class_weights must be nonnegative with positive mass");
  }
  require(image_width > 0 && image_height > 0,
          "image extents must be positive");
  require(box_size.min_side > 0 && box_size.max_side >= box_size.min_side,
          "box sides must satisfy 0 < min <= max");
  require(box_size.max_side <= std::min(image_width, image_height),
          "box_size.max_side cannot exceed the image");
  if (noise.class_scale.size() != 0) {
    require(noise.class_scale.size() == num_classes,
            "noise.class_scale must have one entry per class");
    require((noise.class_scale.array() >= 0).all() &&
                noise.class_scale.allFinite(),
            "noise.class_scale entries must be finite and >= 0");
  }
  if (noise.coordinate_scale.size() != 0) {
    require(noise.coordinate_scale.size() == 4,
            "noise.coordinate_scale must have 4 entries");
    require((noise.coordinate_scale.array() >= 0).all() &&
                noise.coordinate_scale.allFinite(),
            "noise.coordinate_scale entries must be finite and >= 0");
  }
  require(noise.correlation > -1.0 / 3.0 && noise.correlation <= 1.0,
          "correlation must lie in (-1/3, 1] to stay positive definite");
  require(noise.heavy_tail_df >= 0, "heavy_tail_df must be >= 0 (0 = off)");
  require(classifier.sharpness >= 0 && classifier.sharpness <= 1,
          "classifier.sharpness must lie in [0, 1]");
  require(classifier.temperature > 0, "classifier.temperature must be > 0");
  require(ensemble.size >= 1, "ensemble.size must be >= 1");
  require(ensemble.jitter >= 0, "ensemble.jitter must be >= 0");
  require(quantile_head.alpha > 0 && quantile_head.alpha < 1,
          "quantile_head.alpha must lie in (0, 1)");
  require(quantile_head.distortion >= 0,
          "quantile_head.distortion must be >= 0");
  require(confidence_min >= 0 && confidence_min <= confidence_max &&
              confidence_max <= 1,
          "confidence range must satisfy 0 <= min <= max <= 1");
  require(calibration_fraction > 0 && calibration_fraction < 1,
          "calibration_fraction must lie in (0, 1)");
  require(trials >= 1, "trials must be >= 1");
}

namespace {

int categorical(double u, const Vector& cumulative) {
  // cumulative is nondecreasing ending at ~1; returns a 1-based index.
  for (Eigen::Index i = 0; i < cumulative.size(); ++i)
    if (u <= cumulative[i]) return static_cast<int>(i) + 1;
  return static_cast<int>(cumulative.size());
}

Vector cumulative_weights(const Vector& weights) {
  Vector c(weights.size());
  double running = 0.0;
  const double total = weights.sum();
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    running += weights[i] / total;
    c[i] = running;
  }
  return c;
}

// Lower Cholesky factor of the 4x4 equicorrelation matrix; identity when
// rho = 0 and unused when rho = 1 (a single shared draw is exact there).
Matrix equicorrelation_cholesky(double rho) {
  Matrix c = Matrix::Constant(4, 4, rho);
  c.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("correlation matrix is not positive definite");
  return llt.matrixL();
}

struct GeneratorContext {
  Vector cum_class;     // cumulative class weights
  Vector class_scale;   // K
  Vector coord_scale;   // 4
  Matrix chol;          // 4x4, valid when 0 < |rho| < 1
  double z_half = 0.0;  // normal quantile for the band level
  int id_digits = 4;
};

Vector draw_correlated_noise(Rng& rng, const SimulationSpec& spec,
                             const GeneratorContext& ctx) {
  Vector eps(4);
  if (spec.noise.correlation == 1.0) {
    eps.setConstant(rng.normal());
  } else if (spec.noise.correlation == 0.0) {
    for (auto& x : eps) x = rng.normal();
  } else {
    Vector raw(4);
    for (auto& x : raw) x = rng.normal();
    eps = ctx.chol * raw;
  }
  return eps;
}

// Detectors report corner-ordered boxes; heavy noise can cross the raw
// corners, so reorder them the way any detector head would.
void canonicalize_corners(Vector& box) {
  if (box[2] < box[0]) std::swap(box[0], box[2]);
  if (box[3] < box[1]) std::swap(box[1], box[3]);
}

}  // namespace

SyntheticDataset generate_dataset(const SimulationSpec& spec,
                                  std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  GeneratorContext ctx;
  ctx.cum_class =
      cumulative_weights(effective_or_ones(spec.class_weights,
                                           spec.num_classes));
  ctx.class_scale = effective_or_ones(spec.noise.class_scale,
                                      spec.num_classes);
  ctx.coord_scale = effective_or_ones(spec.noise.coordinate_scale, 4);
  if (spec.noise.correlation != 0.0 && spec.noise.correlation != 1.0)
    ctx.chol = equicorrelation_cholesky(spec.noise.correlation);
  const boost::math::normal_distribution<double> unit_normal;
  ctx.z_half =
      boost::math::quantile(unit_normal, 1.0 - spec.quantile_head.alpha / 2.0);
  ctx.id_digits =
      std::max(4, static_cast<int>(std::to_string(spec.num_images).size()));

  SyntheticDataset ds;
  for (int img = 0; img < spec.num_images; ++img) {
    std::string id = std::to_string(img);
    id = "img" + std::string(ctx.id_digits - id.size(), '0') + id;
    auto& dets = ds.detections[id];
    auto& truths = ds.truths[id];
    const int n_obj = rng.uniform_int(spec.objects_per_image.min,
                                      spec.objects_per_image.max);
    for (int obj = 0; obj < n_obj; ++obj) {
      const int z = categorical(rng.uniform(), ctx.cum_class);

      // True posterior: a sharp spike on z blended with a flat Dirichlet
      // draw; the label is sampled from it, making it exactly calibrated.
      Vector dir(spec.num_classes);
      for (auto& x : dir) x = rng.exponential();
      dir /= dir.sum();
      Vector posterior = (1.0 - spec.classifier.sharpness) * dir;
      posterior[z - 1] += spec.classifier.sharpness;
      const int y = categorical(rng.uniform(), cumulative_weights(posterior));

      const double w =
          std::min(std::exp(rng.uniform(std::log(spec.box_size.min_side),
                                        std::log(spec.box_size.max_side))),
                   spec.image_width);
      const double h =
          std::min(w * std::exp(rng.uniform(-0.3, 0.3)), spec.image_height);
      const double cx = rng.uniform(w / 2.0, spec.image_width - w / 2.0);
      const double cy = rng.uniform(h / 2.0, spec.image_height - h / 2.0);
      Vector truth_box(4);
      truth_box << cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0;

      Vector sigma_obj(4);
      for (int k = 0; k < 4; ++k) {
        const double size_factor =
            spec.noise.proportional_to_size ? (k % 2 == 0 ? w : h) / 100.0
                                            : 1.0;
        sigma_obj[k] =
            ctx.class_scale[y - 1] * ctx.coord_scale[k] * size_factor;
      }

      Vector eps = draw_correlated_noise(rng, spec, ctx);
      if (spec.noise.heavy_tail_df > 0) {
        const double chi = rng.chi_squared(spec.noise.heavy_tail_df);
        eps *= std::sqrt(spec.noise.heavy_tail_df / std::max(chi, 1e-12));
      }
      const Vector pred_raw = truth_box + sigma_obj.cwiseProduct(eps);

      DetectionRecord rec;
      rec.image_id = id;
      if (spec.ensemble.size >= 2) {
        std::vector<box_intervals::EnsembleMember> members;
        members.reserve(spec.ensemble.size);
        for (int t = 0; t < spec.ensemble.size; ++t) {
          const Vector jeps = draw_correlated_noise(rng, spec, ctx);
          box_intervals::EnsembleMember m;
          m.coords =
              pred_raw + spec.ensemble.jitter * sigma_obj.cwiseProduct(jeps);
          canonicalize_corners(m.coords);
          m.confidence = rng.uniform(spec.confidence_min, spec.confidence_max);
          members.push_back(std::move(m));
        }
        const auto fused = box_intervals::fuse_ensemble(members);
        rec.box = fused.coords;
        rec.sigma = fused.sigma;
        rec.confidence = fused.confidence;
      } else {
        rec.box = pred_raw;
        canonicalize_corners(rec.box);
        rec.sigma = sigma_obj.cwiseMax(kSigmaFloor);
        rec.confidence = rng.uniform(spec.confidence_min, spec.confidence_max);
      }

      rec.probs = spec.classifier.temperature == 1.0
                      ? posterior
                      : label_sets::temperature_scale(
                            posterior, spec.classifier.temperature);

      // The band is centered on the reported box with the true noise scale,
      // optionally corrupted so imperfect heads are representable.
      const double lo_warp =
          spec.quantile_head.distortion == 0.0
              ? 1.0
              : std::exp(spec.quantile_head.distortion * rng.normal());
      const double hi_warp =
          spec.quantile_head.distortion == 0.0
              ? 1.0
              : std::exp(spec.quantile_head.distortion * rng.normal());
      rec.q_lo = rec.box - ctx.z_half * lo_warp * sigma_obj;
      rec.q_hi = rec.box + ctx.z_half * hi_warp * sigma_obj;

      rec.image_width = spec.image_width;
      rec.image_height = spec.image_height;
      dets.push_back(std::move(rec));

      GroundTruthObject gt;
      gt.image_id = id;
      gt.box = truth_box;
      gt.label = y;
      truths.push_back(std::move(gt));
    }
  }
  return ds;
}

TrialData make_trial(const SimulationSpec& spec, std::uint64_t trial_seed) {
  const auto ds = generate_dataset(spec, derive_seed(trial_seed, 1));
  const auto matched = matching::match_dataset(ds.detections, ds.truths);

  std::vector<std::string> ids;
  ids.reserve(ds.truths.size());
  for (const auto& [id, objs] : ds.truths) ids.push_back(id);
  Rng split_rng(derive_seed(trial_seed, 2));
  std::shuffle(ids.begin(), ids.end(), split_rng.engine());
  const auto n_cal = std::clamp<std::size_t>(
      static_cast<std::size_t>(
          std::llround(spec.calibration_fraction * ids.size())),
      1, ids.size() - 1);
  std::set<std::string> cal_ids(ids.begin(),
                                ids.begin() + static_cast<long>(n_cal));

  TrialData data;
  for (const auto& s : matched) {
    if (cal_ids.count(s.image_id) > 0)
      data.calibration.push_back(s);
    else
      data.test.push_back(s);
  }
  return data;
}

namespace {

double mean_of(const std::vector<double>& v, bool skip_nan = false) {
  double total = 0.0;
  int n = 0;
  for (double x : v) {
    if (skip_nan && std::isnan(x)) continue;
    total += x;
    ++n;
  }
  return n > 0 ? total / n : std::numeric_limits<double>::quiet_NaN();
}

TrialMetrics metrics_from_report(const metrics::EvaluationReport& report,
                                 int num_classes) {
  TrialMetrics tm;
  tm.label_coverage = report.overall.label_coverage;
  tm.box_coverage = report.overall.box_coverage;
  tm.joint_coverage = report.overall.joint_coverage;
  tm.mean_set_size = report.overall.mean_set_size;
  tm.mpiw = report.overall.mpiw;
  tm.mpiw_excluded = report.overall.mpiw_excluded;
  tm.stretch = report.overall.stretch;
  tm.test_count = report.overall.count;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  tm.per_class_label_coverage = Vector::Constant(num_classes, nan);
  tm.per_class_box_coverage = Vector::Constant(num_classes, nan);
  tm.per_class_joint_coverage = Vector::Constant(num_classes, nan);
  for (const auto& [y, cell] : report.by_class) {
    if (y < 1 || y > num_classes) continue;
    tm.per_class_label_coverage[y - 1] = cell.label_coverage;
    tm.per_class_box_coverage[y - 1] = cell.box_coverage;
    tm.per_class_joint_coverage[y - 1] = cell.joint_coverage;
  }
  for (const auto& [stratum, cell] : report.by_stratum)
    tm.per_stratum_box_coverage[stratum] = cell.box_coverage;
  return tm;
}

}  // namespace

std::vector<TrialSummary> run_coverage_study(
    const SimulationSpec& spec, const std::vector<PipelineConfig>& configs) {
  spec.validate();
  if (configs.empty())
    throw std::invalid_argument("run_coverage_study needs at least one config");
  for (const auto& c : configs) {
    c.miscoverage.validate();
    pipeline::validate_combination(c.box_method, c.correction);
  }

  std::vector<TrialSummary> summaries(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i)
    summaries[i].config_name = configs[i].name;

  for (int trial = 0; trial < spec.trials; ++trial) {
    const auto data =
        make_trial(spec, derive_seed(spec.seed, static_cast<std::uint64_t>(trial)));
    if (data.calibration.empty() || data.test.empty())
      throw DataError("trial " + std::to_string(trial) +
                      " produced an empty split; increase num_images or "
                      "objects_per_image");
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto& c = configs[i];
      const auto model =
          pipeline::calibrate(data.calibration, c.miscoverage, c.box_method,
                              c.correction, c.label_method, c.min_class_count);
      std::vector<metrics::EvaluatedSample> evaluated;
      evaluated.reserve(data.test.size());
      for (const auto& s : data.test) {
        metrics::EvaluatedSample es;
        es.output = pipeline::predict(s.prediction, model, &s.truth);
        es.sample = s;
        evaluated.push_back(std::move(es));
      }
      summaries[i].trials.push_back(metrics_from_report(
          metrics::stratified_report(evaluated), spec.num_classes));
    }
  }

  for (auto& summary : summaries) {
    std::vector<double> label, box, joint, mpiw, sizes;
    for (const auto& t : summary.trials) {
      label.push_back(t.label_coverage);
      box.push_back(t.box_coverage);
      joint.push_back(t.joint_coverage);
      mpiw.push_back(t.mpiw);
      sizes.push_back(t.mean_set_size);
    }
    summary.mean_label_coverage = mean_of(label);
    summary.mean_box_coverage = mean_of(box);
    summary.mean_joint_coverage = mean_of(joint);
    summary.mean_mpiw = mean_of(mpiw, /*skip_nan=*/true);
    summary.mean_set_size = mean_of(sizes);
    summary.joint_coverage_q01 = empirical_quantile(joint, 0.01);
    summary.joint_coverage_q99 = empirical_quantile(joint, 0.99);
  }
  return summaries;
}

namespace {

std::string tsv_number(double x) {
  if (std::isnan(x)) return "nan";
  return json(x).dump();
}

}  // namespace

std::string summary_to_tsv(const std::vector<TrialSummary>& summaries) {
  std::ostringstream os;
  os << "config\ttrial\tlabel_coverage\tbox_coverage\tjoint_coverage"
        "\tmean_set_size\tmpiw\tstretch\ttest_count\n";
  for (const auto& summary : summaries) {
    for (std::size_t t = 0; t < summary.trials.size(); ++t) {
      const auto& m = summary.trials[t];
      os << summary.config_name << '\t' << t << '\t'
         << tsv_number(m.label_coverage) << '\t' << tsv_number(m.box_coverage)
         << '\t' << tsv_number(m.joint_coverage) << '\t'
         << tsv_number(m.mean_set_size) << '\t' << tsv_number(m.mpiw) << '\t'
         << tsv_number(m.stretch) << '\t' << m.test_count << '\n';
    }
    os << summary.config_name << "\tmean\t"
       << tsv_number(summary.mean_label_coverage) << '\t'
       << tsv_number(summary.mean_box_coverage) << '\t'
       << tsv_number(summary.mean_joint_coverage) << '\t'
       << tsv_number(summary.mean_set_size) << '\t'
       << tsv_number(summary.mean_mpiw) << "\tnan\t-\n";
  }
  return os.str();
}

std::vector<SweepPoint> temperature_sweep(
    const SimulationSpec& spec, double alpha_label,
    const std::vector<double>& temperatures) {
  spec.validate();
  if (temperatures.empty())
    throw std::invalid_argument("temperature_sweep needs temperatures");
  if (!(alpha_label > 0 && alpha_label < 1))
    throw std::invalid_argument("alpha_label must lie in (0, 1)");

  std::vector<SweepPoint> points;
  for (double temperature : temperatures) {
    if (!(temperature > 0))
      throw std::invalid_argument("temperatures must be positive");
    SimulationSpec warped = spec;
    warped.classifier.temperature = temperature;
    SweepPoint point;
    point.temperature = temperature;
    long naive_hits = 0, classthr_hits = 0, naive_size = 0, classthr_size = 0,
         total = 0;
    for (int trial = 0; trial < spec.trials; ++trial) {
      // Same derived seed regardless of temperature: the generative draws
      // are identical, only the exported probabilities differ, so points
      // along the sweep are paired.
      const auto data = make_trial(
          warped, derive_seed(spec.seed, static_cast<std::uint64_t>(trial)));
      if (data.calibration.empty() || data.test.empty())
        throw DataError("temperature sweep trial produced an empty split");
      const auto lq = label_sets::calibrate_labels(
          data.calibration, spec.num_classes, alpha_label);
      for (const auto& s : data.test) {
        const auto classthr =
            label_sets::predict_classthr(s.prediction.probs, lq);
        const auto naive =
            label_sets::predict_naive(s.prediction.probs, alpha_label);
        classthr_hits += classthr.contains(s.truth.label) ? 1 : 0;
        naive_hits += naive.contains(s.truth.label) ? 1 : 0;
        classthr_size += static_cast<long>(classthr.labels.size());
        naive_size += static_cast<long>(naive.labels.size());
        ++total;
      }
    }
    point.naive_label_coverage = static_cast<double>(naive_hits) / total;
    point.classthr_label_coverage = static_cast<double>(classthr_hits) / total;
    point.naive_set_size = static_cast<double>(naive_size) / total;
    point.classthr_set_size = static_cast<double>(classthr_size) / total;
    points.push_back(point);
  }
  return points;
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty())
    throw std::invalid_argument("ks_statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_critical_value(std::size_t n, double significance) {
  if (n == 0) throw std::invalid_argument("ks_critical_value needs n >= 1");
  if (!(significance > 0 && significance < 1))
    throw std::invalid_argument("significance must lie in (0, 1)");
  return std::sqrt(-std::log(significance / 2.0) / 2.0) /
         std::sqrt(static_cast<double>(n));
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty())
    throw std::invalid_argument("empirical_quantile needs values");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  const auto idx = static_cast<std::size_t>(std::min<double>(
      std::max(std::ceil(p * static_cast<double>(n)) - 1.0, 0.0),
      static_cast<double>(n - 1)));
  return values[idx];
}

namespace {

Vector json_vector(const json& j, const std::string& field) {
  if (!j.is_array())
    throw DataError("field " + field + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) {
    if (!e.is_number())
      throw DataError("field " + field + ": expected numbers");
    v[i++] = e.get<double>();
  }
  return v;
}

// A spec with a misspelled knob must not silently run with the default, so
// every object is checked against its known keys.
void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const char* k : known)
      if (key == k) found = true;
    if (!found)
      throw DataError("unknown field '" + (where.empty() ? key : where + "." + key) +
                      "'");
  }
}

}  // namespace

SimulationSpec load_simulation_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(path + ": spec must be one object");

  SimulationSpec spec;
  try {
    check_keys(j, "",
               {"num_classes", "num_images", "objects_per_image",
                "class_weights", "image_width", "image_height", "box_size",
                "noise", "classifier", "ensemble", "quantile_head",
                "confidence_min", "confidence_max", "calibration_fraction",
                "trials", "seed"});
    spec.num_classes = j.value("num_classes", spec.num_classes);
    spec.num_images = j.value("num_images", spec.num_images);
    if (j.contains("objects_per_image")) {
      const auto& o = j.at("objects_per_image");
      check_keys(o, "objects_per_image", {"min", "max"});
      spec.objects_per_image.min = o.value("min", spec.objects_per_image.min);
      spec.objects_per_image.max = o.value("max", spec.objects_per_image.max);
    }
    if (j.contains("class_weights"))
      spec.class_weights = json_vector(j.at("class_weights"), "class_weights");
    spec.image_width = j.value("image_width", spec.image_width);
    spec.image_height = j.value("image_height", spec.image_height);
    if (j.contains("box_size")) {
      const auto& o = j.at("box_size");
      check_keys(o, "box_size", {"min_side", "max_side"});
      spec.box_size.min_side = o.value("min_side", spec.box_size.min_side);
      spec.box_size.max_side = o.value("max_side", spec.box_size.max_side);
    }
    if (j.contains("noise")) {
      const auto& o = j.at("noise");
      check_keys(o, "noise",
                 {"class_scale", "coordinate_scale", "correlation",
                  "proportional_to_size", "heavy_tail_df"});
      if (o.contains("class_scale"))
        spec.noise.class_scale =
            json_vector(o.at("class_scale"), "noise.class_scale");
      if (o.contains("coordinate_scale"))
        spec.noise.coordinate_scale =
            json_vector(o.at("coordinate_scale"), "noise.coordinate_scale");
      spec.noise.correlation = o.value("correlation", spec.noise.correlation);
      spec.noise.proportional_to_size =
          o.value("proportional_to_size", spec.noise.proportional_to_size);
      spec.noise.heavy_tail_df =
          o.value("heavy_tail_df", spec.noise.heavy_tail_df);
    }
    if (j.contains("classifier")) {
      const auto& o = j.at("classifier");
      check_keys(o, "classifier", {"sharpness", "temperature"});
      spec.classifier.sharpness =
          o.value("sharpness", spec.classifier.sharpness);
      spec.classifier.temperature =
          o.value("temperature", spec.classifier.temperature);
    }
    if (j.contains("ensemble")) {
      const auto& o = j.at("ensemble");
      check_keys(o, "ensemble", {"size", "jitter"});
      spec.ensemble.size = o.value("size", spec.ensemble.size);
      spec.ensemble.jitter = o.value("jitter", spec.ensemble.jitter);
    }
    if (j.contains("quantile_head")) {
      const auto& o = j.at("quantile_head");
      check_keys(o, "quantile_head", {"alpha", "distortion"});
      spec.quantile_head.alpha = o.value("alpha", spec.quantile_head.alpha);
      spec.quantile_head.distortion =
          o.value("distortion", spec.quantile_head.distortion);
    }
    spec.confidence_min = j.value("confidence_min", spec.confidence_min);
    spec.confidence_max = j.value("confidence_max", spec.confidence_max);
    spec.calibration_fraction =
        j.value("calibration_fraction", spec.calibration_fraction);
    spec.trials = j.value("trials", spec.trials);
    spec.seed = j.value("seed", spec.seed);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(path + ": " + e.what());
  }
  return spec;
}

}  // namespace confbox::harness
