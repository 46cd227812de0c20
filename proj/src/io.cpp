#include "confbox/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace confbox::io {

using nlohmann::json;

namespace {

constexpr int kModelFormatVersion = 1;

[[noreturn]] void fail(const std::string& message) { throw DataError(message); }

// Infinities (and NaN in reports) cannot ride as bare numbers in this
// serialization, so they travel as sentinel strings.
json real_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double real_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  fail("field " + field + ": expected a real or an inf sentinel");
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (double x : v.reshaped()) arr.push_back(real_to_json(x));
  return arr;
}

Vector vector_from_json(const json& j, const std::string& field,
                        Eigen::Index expected_size = -1) {
  if (!j.is_array()) fail("field " + field + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) v[i++] = real_from_json(e, field);
  if (expected_size >= 0 && v.size() != expected_size)
    fail("field " + field + ": expected " + std::to_string(expected_size) +
         " entries, got " + std::to_string(v.size()));
  return v;
}

std::string string_field(const json& j, const std::string& field) {
  if (!j.contains(field) || !j.at(field).is_string())
    fail("field " + field + ": missing or not a string");
  return j.at(field).get<std::string>();
}

double number_field(const json& j, const std::string& field) {
  if (!j.contains(field) || !j.at(field).is_number())
    fail("field " + field + ": missing or not a number");
  return j.at(field).get<double>();
}

int int_field(const json& j, const std::string& field) {
  if (!j.contains(field) || !j.at(field).is_number_integer())
    fail("field " + field + ": missing or not an integer");
  return j.at(field).get<int>();
}

void check_box(const Vector& box) {
  if (box.size() < 1) fail("field box: empty");
  if (!box.allFinite()) fail("field box: coordinates must be finite");
  if (box.size() == 4) {
    if (box[2] < box[0]) fail("field box: x1 < x0");
    if (box[3] < box[1]) fail("field box: y1 < y0");
  }
}

DetectionRecord parse_detection(const json& j, LoadStats& stats,
                                const std::string& fallback_image_id = {}) {
  if (!j.is_object()) fail("record is not an object");
  DetectionRecord r;
  if (j.contains("image_id")) {
    r.image_id = string_field(j, "image_id");
  } else if (!fallback_image_id.empty()) {
    r.image_id = fallback_image_id;
  } else {
    fail("field image_id: missing");
  }

  if (!j.contains("box")) fail("field box: missing");
  r.box = vector_from_json(j.at("box"), "box");
  check_box(r.box);
  const auto m = r.box.size();

  if (!j.contains("probs")) fail("field probs: missing");
  r.probs = vector_from_json(j.at("probs"), "probs");
  if (r.probs.size() < 1) fail("field probs: empty");
  for (double p : r.probs.reshaped())
    if (!(p >= -1e-12 && p <= 1.0 + 1e-12))
      fail("field probs: entries must lie in [0, 1]");
  if (std::abs(r.probs.sum() - 1.0) > kProbSumTol)
    fail("field probs: not normalized beyond tolerance");

  if (j.contains("confidence")) {
    r.confidence = number_field(j, "confidence");
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
      fail("field confidence: must lie in [0, 1]");
  }

  if (j.contains("sigma")) {
    Vector s = vector_from_json(j.at("sigma"), "sigma", m);
    for (double x : s.reshaped())
      if (!(x >= 0.0) || std::isinf(x))
        fail("field sigma: entries must be finite and nonnegative");
    r.sigma = s.cwiseMax(kSigmaFloor);
  }

  const bool has_lo = j.contains("q_lo");
  const bool has_hi = j.contains("q_hi");
  if (has_lo != has_hi) fail("fields q_lo/q_hi: must be present together");
  if (has_lo) {
    Vector lo = vector_from_json(j.at("q_lo"), "q_lo", m);
    Vector hi = vector_from_json(j.at("q_hi"), "q_hi", m);
    if (!lo.allFinite() || !hi.allFinite())
      fail("fields q_lo/q_hi: entries must be finite");
    for (Eigen::Index k = 0; k < m; ++k) {
      if (lo[k] > hi[k]) {
        std::swap(lo[k], hi[k]);
        if (stats.crossings_repaired == 0)
          stats.warnings.push_back(
              "quantile band crossings repaired by swapping ends");
        stats.crossings_repaired++;
      }
    }
    r.q_lo = lo;
    r.q_hi = hi;
  }

  if (j.contains("image_width")) {
    r.image_width = number_field(j, "image_width");
    if (!(*r.image_width > 0.0)) fail("field image_width: must be positive");
  }
  if (j.contains("image_height")) {
    r.image_height = number_field(j, "image_height");
    if (!(*r.image_height > 0.0)) fail("field image_height: must be positive");
  }
  return r;
}

GroundTruthObject parse_truth(const json& j, const LoadOptions& options,
                              const std::string& fallback_image_id = {}) {
  if (!j.is_object()) fail("record is not an object");
  GroundTruthObject t;
  if (j.contains("image_id")) {
    t.image_id = string_field(j, "image_id");
  } else if (!fallback_image_id.empty()) {
    t.image_id = fallback_image_id;
  } else {
    fail("field image_id: missing");
  }

  if (!j.contains("box")) fail("field box: missing");
  t.box = vector_from_json(j.at("box"), "box");
  check_box(t.box);

  if (!j.contains("label")) fail("field label: missing");
  const json& lab = j.at("label");
  if (lab.is_string()) {
    if (!options.class_mapping)
      fail("field label: text label without a class mapping");
    const auto it = options.class_mapping->find(lab.get<std::string>());
    if (it == options.class_mapping->end())
      fail("field label: '" + lab.get<std::string>() +
           "' missing from the class mapping");
    t.label = it->second;
  } else if (lab.is_number_integer()) {
    t.label = lab.get<int>();
  } else {
    fail("field label: expected an integer or a mapped name");
  }
  if (t.label < 1) fail("field label: class ids start at 1");
  return t;
}

json detection_to_json(const DetectionRecord& r) {
  json j;
  j["image_id"] = r.image_id;
  j["box"] = vector_to_json(r.box);
  j["probs"] = vector_to_json(r.probs);
  j["confidence"] = r.confidence;
  if (r.sigma) j["sigma"] = vector_to_json(*r.sigma);
  if (r.q_lo) j["q_lo"] = vector_to_json(*r.q_lo);
  if (r.q_hi) j["q_hi"] = vector_to_json(*r.q_hi);
  if (r.image_width) j["image_width"] = *r.image_width;
  if (r.image_height) j["image_height"] = *r.image_height;
  return j;
}

json truth_to_json(const GroundTruthObject& t) {
  json j;
  j["image_id"] = t.image_id;
  j["box"] = vector_to_json(t.box);
  j["label"] = t.label;
  return j;
}

// One record per line; parse errors carry file:line and either fail the load
// or are dropped under the lenient option.
template <typename T, typename ParseOne>
std::vector<T> load_lines(const std::string& path, const LoadOptions& options,
                          LoadStats* stats, ParseOne parse_one) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  std::vector<T> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out.push_back(parse_one(j, st));
      st.loaded++;
    } catch (const json::exception& e) {
      if (!options.lenient)
        fail(path + ":" + std::to_string(lineno) + ": " + e.what());
      st.dropped++;
    } catch (const DataError& e) {
      if (!options.lenient)
        fail(path + ":" + std::to_string(lineno) + ": " + e.what());
      st.dropped++;
    } catch (const std::invalid_argument& e) {
      if (!options.lenient)
        fail(path + ":" + std::to_string(lineno) + ": " + e.what());
      st.dropped++;
    }
  }
  return out;
}

std::string dump_line(const json& j) { return j.dump(); }

}  // namespace

ClassMapping load_class_mapping(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(path + ": " + e.what());
  }
  if (!j.is_object()) fail(path + ": class mapping must be an object");
  ClassMapping mapping;
  for (const auto& [name, id] : j.items()) {
    if (!id.is_number_integer() || id.get<int>() < 1)
      fail(path + ": mapping for '" + name + "' must be a class id >= 1");
    mapping[name] = id.get<int>();
  }
  return mapping;
}

std::vector<DetectionRecord> load_detections(const std::string& path,
                                             const LoadOptions& options,
                                             LoadStats* stats) {
  return load_lines<DetectionRecord>(
      path, options, stats,
      [](const json& j, LoadStats& st) { return parse_detection(j, st); });
}

std::vector<GroundTruthObject> load_ground_truth(const std::string& path,
                                                 const LoadOptions& options,
                                                 LoadStats* stats) {
  return load_lines<GroundTruthObject>(
      path, options, stats,
      [&options](const json& j, LoadStats&) { return parse_truth(j, options); });
}

std::vector<MatchedSample> load_matched(const std::string& path,
                                        const LoadOptions& options,
                                        LoadStats* stats) {
  return load_lines<MatchedSample>(
      path, options, stats, [&options](const json& j, LoadStats& st) {
        if (!j.is_object()) fail("record is not an object");
        MatchedSample s;
        s.image_id = string_field(j, "image_id");
        if (!j.contains("prediction")) fail("field prediction: missing");
        if (!j.contains("truth")) fail("field truth: missing");
        s.prediction = parse_detection(j.at("prediction"), st, s.image_id);
        s.truth = parse_truth(j.at("truth"), options, s.image_id);
        s.iou = number_field(j, "iou");
        if (!(s.iou >= 0.0 && s.iou <= 1.0))
          fail("field iou: must lie in [0, 1]");
        return s;
      });
}

void save_detections(const std::string& path,
                     const std::vector<DetectionRecord>& records) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  for (const auto& r : records) out << dump_line(detection_to_json(r)) << '\n';
}

void save_ground_truth(const std::string& path,
                       const std::vector<GroundTruthObject>& objects) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  for (const auto& t : objects) out << dump_line(truth_to_json(t)) << '\n';
}

void save_matched(const std::string& path,
                  const std::vector<MatchedSample>& samples) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  for (const auto& s : samples) {
    json j;
    j["image_id"] = s.image_id;
    j["prediction"] = detection_to_json(s.prediction);
    j["truth"] = truth_to_json(s.truth);
    j["iou"] = s.iou;
    out << dump_line(j) << '\n';
  }
}

void save_model(const std::string& path,
                const pipeline::CalibrationModel& model) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["alpha_label"] = model.config.alpha_label;
  j["alpha_box"] = model.config.alpha_box;
  j["label_method"] = label_sets::to_string(model.label_method);
  j["box_method"] = box_intervals::to_string(model.box_method);
  j["correction"] = pipeline::to_string(model.correction);
  j["num_classes"] = model.num_classes;
  j["num_coords"] = model.num_coords;
  j["min_class_count"] = model.min_class_count;
  json counts = json::array();
  for (int y = 0; y < model.num_classes; ++y)
    counts.push_back(model.class_counts[y]);
  j["class_counts"] = counts;
  j["label_quantiles"] = vector_to_json(model.label_quantiles.q);
  json rows = json::array();
  for (int y = 0; y < model.num_classes; ++y)
    rows.push_back(vector_to_json(model.box_quantiles.row(y).transpose()));
  j["box_quantiles"] = rows;

  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  out << j.dump(2) << '\n';
}

pipeline::CalibrationModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(path + ": " + e.what());
  }
  if (!j.is_object()) fail(path + ": model file must hold one object");
  try {
    if (int_field(j, "format_version") != kModelFormatVersion)
      fail("unsupported model format version " +
           j.at("format_version").dump());
    pipeline::CalibrationModel model;
    model.config.alpha_label = number_field(j, "alpha_label");
    model.config.alpha_box = number_field(j, "alpha_box");
    model.config.validate();
    model.label_method =
        label_sets::label_method_from_string(string_field(j, "label_method"));
    model.box_method =
        box_intervals::box_method_from_string(string_field(j, "box_method"));
    model.correction =
        pipeline::correction_from_string(string_field(j, "correction"));
    model.num_classes = int_field(j, "num_classes");
    model.num_coords = int_field(j, "num_coords");
    model.min_class_count = int_field(j, "min_class_count");
    if (model.num_classes < 1 || model.num_coords < 1)
      fail("model dimensions must be positive");

    if (!j.contains("class_counts") || !j.at("class_counts").is_array() ||
        j.at("class_counts").size() !=
            static_cast<std::size_t>(model.num_classes))
      fail("field class_counts: expected " +
           std::to_string(model.num_classes) + " entries");
    model.class_counts = Eigen::VectorXi(model.num_classes);
    for (int y = 0; y < model.num_classes; ++y)
      model.class_counts[y] =
          j.at("class_counts").at(static_cast<std::size_t>(y)).get<int>();

    model.label_quantiles.q = vector_from_json(
        j.at("label_quantiles"), "label_quantiles", model.num_classes);
    model.label_quantiles.alpha_label = model.config.alpha_label;

    if (!j.contains("box_quantiles") || !j.at("box_quantiles").is_array() ||
        j.at("box_quantiles").size() !=
            static_cast<std::size_t>(model.num_classes))
      fail("field box_quantiles: expected " +
           std::to_string(model.num_classes) + " rows");
    model.box_quantiles = Matrix(model.num_classes, model.num_coords);
    for (int y = 0; y < model.num_classes; ++y)
      model.box_quantiles.row(y) =
          vector_from_json(j.at("box_quantiles").at(static_cast<std::size_t>(y)),
                           "box_quantiles",
                           model.num_coords)
              .transpose();
    return model;
  } catch (const json::exception& e) {
    fail(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    fail(path + ": " + e.what());
  }
}

namespace {

const char* sidedness_name(box_intervals::Sidedness s) {
  return s == box_intervals::Sidedness::TwoSided ? "two_sided"
                                                 : "one_sided_outer";
}

box_intervals::Sidedness sidedness_from_name(const std::string& name) {
  if (name == "two_sided") return box_intervals::Sidedness::TwoSided;
  if (name == "one_sided_outer") return box_intervals::Sidedness::OneSidedOuter;
  fail("field sidedness: unknown value '" + name + "'");
}

}  // namespace

void save_predictions(const std::string& path,
                      const std::vector<PredictionLine>& lines) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  for (const auto& line : lines) {
    json j;
    j["image_id"] = line.image_id;
    j["box"] = vector_to_json(line.box);
    j["predicted_label"] = line.output.predicted_label;
    json set = json::array();
    for (int y : line.output.label_set.labels) set.push_back(y);
    j["label_set"] = set;
    j["label_method"] = label_sets::to_string(line.output.label_set.method);
    j["fallback"] = line.output.label_set.fallback;
    j["selected_quantiles"] = vector_to_json(line.output.selected_quantiles);
    json iv;
    iv["lo"] = vector_to_json(line.output.interval.lo);
    iv["hi"] = vector_to_json(line.output.interval.hi);
    iv["sidedness"] = sidedness_name(line.output.interval.sidedness);
    j["interval"] = iv;
    if (line.truth) {
      j["truth"] = truth_to_json(*line.truth);
      j["label_covered"] = *line.output.label_covered;
      j["box_covered"] = *line.output.box_covered;
      j["joint_covered"] = *line.output.joint_covered;
    }
    out << dump_line(j) << '\n';
  }
}

std::vector<PredictionLine> load_predictions(const std::string& path) {
  LoadOptions options;
  return load_lines<PredictionLine>(
      path, options, nullptr, [&options](const json& j, LoadStats&) {
        if (!j.is_object()) fail("record is not an object");
        PredictionLine line;
        line.image_id = string_field(j, "image_id");
        line.box = vector_from_json(j.at("box"), "box");
        line.output.predicted_label = int_field(j, "predicted_label");
        if (!j.contains("label_set") || !j.at("label_set").is_array())
          fail("field label_set: missing or not an array");
        for (const auto& y : j.at("label_set"))
          line.output.label_set.labels.push_back(y.get<int>());
        line.output.label_set.method = label_sets::label_method_from_string(
            string_field(j, "label_method"));
        line.output.label_set.fallback = j.value("fallback", false);
        line.output.selected_quantiles = vector_from_json(
            j.at("selected_quantiles"), "selected_quantiles");
        if (!j.contains("interval") || !j.at("interval").is_object())
          fail("field interval: missing");
        const json& iv = j.at("interval");
        line.output.interval.lo = vector_from_json(iv.at("lo"), "interval.lo");
        line.output.interval.hi = vector_from_json(iv.at("hi"), "interval.hi");
        line.output.interval.sidedness =
            sidedness_from_name(string_field(iv, "sidedness"));
        if (line.output.interval.lo.size() != line.output.interval.hi.size())
          fail("field interval: lo/hi length mismatch");
        if (j.contains("truth")) {
          line.truth = parse_truth(j.at("truth"), options, line.image_id);
          if (!j.contains("label_covered") || !j.contains("box_covered") ||
              !j.contains("joint_covered"))
            fail("coverage flags missing alongside truth");
          line.output.label_covered = j.at("label_covered").get<bool>();
          line.output.box_covered = j.at("box_covered").get<bool>();
          line.output.joint_covered = j.at("joint_covered").get<bool>();
        }
        return line;
      });
}

std::vector<metrics::EvaluatedSample> to_evaluated_samples(
    const std::vector<PredictionLine>& lines) {
  std::vector<metrics::EvaluatedSample> out;
  out.reserve(lines.size());
  for (const auto& line : lines) {
    if (!line.truth)
      fail("prediction for image '" + line.image_id +
           "' carries no truth; cannot evaluate coverage");
    metrics::EvaluatedSample es;
    es.output = line.output;
    es.sample.image_id = line.image_id;
    es.sample.prediction.image_id = line.image_id;
    es.sample.prediction.box = line.box;
    es.sample.truth = *line.truth;
    out.push_back(std::move(es));
  }
  return out;
}

namespace {

std::string cell_number(double x) {
  if (std::isnan(x)) return "nan";
  return json(x).dump();
}

void tsv_row(std::ostream& os, const std::string& section,
             const std::string& key, const metrics::ReportCell& cell) {
  os << section << '\t' << key << '\t' << cell.count << '\t'
     << cell_number(cell.label_coverage) << '\t'
     << cell_number(cell.box_coverage) << '\t'
     << cell_number(cell.joint_coverage) << '\t'
     << cell_number(cell.mean_set_size) << '\t' << cell_number(cell.mpiw)
     << '\t' << cell.mpiw_excluded << '\t' << cell_number(cell.stretch)
     << '\n';
}

json cell_to_json(const metrics::ReportCell& cell) {
  json j;
  j["count"] = cell.count;
  j["label_coverage"] = real_to_json(cell.label_coverage);
  j["box_coverage"] = real_to_json(cell.box_coverage);
  j["joint_coverage"] = real_to_json(cell.joint_coverage);
  j["mean_set_size"] = real_to_json(cell.mean_set_size);
  j["mpiw"] = real_to_json(cell.mpiw);
  j["mpiw_excluded"] = cell.mpiw_excluded;
  j["stretch"] = real_to_json(cell.stretch);
  return j;
}

}  // namespace

std::string report_to_tsv(const metrics::EvaluationReport& report) {
  std::ostringstream os;
  os << "section\tkey\tcount\tlabel_coverage\tbox_coverage\tjoint_coverage"
        "\tmean_set_size\tmpiw\tmpiw_excluded\tstretch\n";
  tsv_row(os, "overall", "all", report.overall);
  for (const auto& [y, cell] : report.by_class)
    tsv_row(os, "class", std::to_string(y), cell);
  for (const auto& [s, cell] : report.by_stratum)
    tsv_row(os, "stratum", geometry::to_string(s), cell);
  for (const auto& [correct, cell] : report.by_correctness)
    tsv_row(os, "correctness", correct ? "correct" : "incorrect", cell);
  return os.str();
}

std::string report_to_json(const metrics::EvaluationReport& report) {
  json j;
  j["overall"] = cell_to_json(report.overall);
  json by_class = json::object();
  for (const auto& [y, cell] : report.by_class)
    by_class[std::to_string(y)] = cell_to_json(cell);
  j["by_class"] = by_class;
  json by_stratum = json::object();
  for (const auto& [s, cell] : report.by_stratum)
    by_stratum[geometry::to_string(s)] = cell_to_json(cell);
  j["by_stratum"] = by_stratum;
  json by_corr = json::object();
  for (const auto& [correct, cell] : report.by_correctness)
    by_corr[correct ? "correct" : "incorrect"] = cell_to_json(cell);
  j["by_correctness"] = by_corr;
  return j.dump(2) + "\n";
}

}  // namespace confbox::io
