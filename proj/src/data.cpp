#include "realid/data.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "realid/csv.hpp"

namespace realid {

namespace {

// Derived-stream ids; spacing them out keeps additions cheap.
enum : std::uint64_t {
  kStreamTrainReal = 10,
  kStreamTrainFake = 11,
  kStreamTrainFakeArtifact = 12,
  kStreamTestReal = 13,
  kStreamTestFake = 14,
  kStreamTestFakeArtifact = 15,
  kStreamShifted = 16,
  kStreamMisartifact = 17,
};

Vector sample_from(const GaussianMode& mode, SeededRng& rng) {
  Vector x(mode.mean.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = mode.mean[i] + mode.stddev * rng.gaussian();
  }
  return x;
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.real_modes.empty()) throw std::invalid_argument("generate: no real modes");
  const std::size_t dim = spec.real_modes[0].mean.size();
  if (dim == 0) throw std::invalid_argument("generate: zero-dimensional spec");
  std::size_t total = spec.fake.count + spec.shifted_real.count;
  for (const GaussianMode& m : spec.real_modes) {
    total += m.count;
    if (m.mean.size() != dim) throw std::invalid_argument("generate: mode dim mismatch");
    if (m.stddev < 0.0) throw std::invalid_argument("generate: negative stddev");
  }
  if (total == 0) throw std::invalid_argument("generate: degenerate spec, zero counts everywhere");
  if (spec.fake.mean.size() != dim || spec.shifted_real.mean.size() != dim) {
    throw std::invalid_argument("generate: mode dim mismatch");
  }
  if (spec.artifact_direction.size() != dim) {
    throw std::invalid_argument("generate: artifact direction dim mismatch");
  }
  if (spec.fake.stddev < 0.0 || spec.shifted_real.stddev < 0.0 || spec.fake_artifact_jitter < 0.0) {
    throw std::invalid_argument("generate: negative stddev");
  }
  if (spec.artifact_fraction < 0.0 || spec.artifact_fraction > 1.0 ||
      spec.fake_artifact_fraction < 0.0 || spec.fake_artifact_fraction > 1.0) {
    throw std::invalid_argument("generate: fractions must lie in [0, 1]");
  }
}

// Mean trace of the per-mode sample covariances; measures cluster tightness.
double within_mode_trace(const std::vector<std::vector<Vector>>& per_mode) {
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& points : per_mode) {
    if (points.size() < 2) continue;
    const std::size_t dim = points[0].size();
    Vector mean(dim, 0.0);
    for (const Vector& p : points) axpy(1.0, p, mean);
    for (double& m : mean) m /= static_cast<double>(points.size());
    double trace = 0.0;
    for (const Vector& p : points) {
      for (std::size_t i = 0; i < dim; ++i) {
        double d = p[i] - mean[i];
        trace += d * d;
      }
    }
    sum += trace / static_cast<double>(points.size() - 1);
    ++used;
  }
  return used > 0 ? sum / static_cast<double>(used) : 0.0;
}

double pooled_trace(const std::vector<Sample>& samples, int label) {
  std::vector<const Vector*> points;
  for (const Sample& s : samples) {
    if (s.label == label) points.push_back(&s.x);
  }
  if (points.size() < 2) return 0.0;
  const std::size_t dim = points[0]->size();
  Vector mean(dim, 0.0);
  for (const Vector* p : points) axpy(1.0, *p, mean);
  for (double& m : mean) m /= static_cast<double>(points.size());
  double trace = 0.0;
  for (const Vector* p : points) {
    for (std::size_t i = 0; i < dim; ++i) {
      double d = (*p)[i] - mean[i];
      trace += d * d;
    }
  }
  return trace / static_cast<double>(points.size() - 1);
}

Vector class_mean(const std::vector<Sample>& samples, int label, std::size_t dim) {
  Vector mean(dim, 0.0);
  std::size_t n = 0;
  for (const Sample& s : samples) {
    if (s.label != label) continue;
    axpy(1.0, s.x, mean);
    ++n;
  }
  if (n > 0) {
    for (double& m : mean) m /= static_cast<double>(n);
  }
  return mean;
}

std::vector<Sample> draw_fakes(const GaussianMode& fake, const Vector& artifact,
                               double gamma, double fraction, double jitter,
                               SeededRng& position_rng, SeededRng& artifact_rng) {
  std::vector<Sample> out;
  out.reserve(fake.count);
  for (std::size_t i = 0; i < fake.count; ++i) {
    Sample s;
    s.label = 1;
    s.x = sample_from(fake, position_rng);
    if (artifact_rng.uniform() < fraction) {
      for (std::size_t d = 0; d < s.x.size(); ++d) {
        s.x[d] += gamma * artifact[d] + jitter * artifact_rng.gaussian();
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

const char* split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain:
      return "train";
    case SplitTag::kTestIid:
      return "test_iid";
    case SplitTag::kShiftedReal:
      return "shifted_real";
    case SplitTag::kMisartifactReal:
      return "misartifact_real";
  }
  return "unknown";
}

SyntheticSpec default_spec() {
  SyntheticSpec spec;
  spec.real_modes = {
      {{-2.0, 0.0}, 0.25, 100},
      {{2.0, 0.0}, 0.25, 100},
      {{0.0, 2.0}, 0.25, 100},
  };
  spec.fake = {{0.0, 0.0}, 2.5, 300};
  spec.shifted_real = {{0.0, -3.0}, 0.25, 100};
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  spec.artifact_direction = {inv_sqrt2, inv_sqrt2};
  spec.artifact_gamma = 1.2;
  spec.artifact_fraction = 0.5;
  spec.fake_artifact_fraction = 0.5;
  spec.fake_artifact_jitter = 0.3;
  spec.seed = 0;
  return spec;
}

SyntheticDataset generate(const SyntheticSpec& spec) {
  validate_spec(spec);
  bool degenerate = false;
  Vector direction = l2_normalize(spec.artifact_direction, &degenerate);
  if (degenerate) throw std::invalid_argument("generate: artifact direction is degenerate");

  SyntheticDataset data;
  data.input_dim = spec.real_modes[0].mean.size();

  SeededRng train_real_rng = SeededRng::derive(spec.seed, kStreamTrainReal);
  SeededRng train_fake_rng = SeededRng::derive(spec.seed, kStreamTrainFake);
  SeededRng train_fake_art_rng = SeededRng::derive(spec.seed, kStreamTrainFakeArtifact);
  SeededRng test_real_rng = SeededRng::derive(spec.seed, kStreamTestReal);
  SeededRng test_fake_rng = SeededRng::derive(spec.seed, kStreamTestFake);
  SeededRng test_fake_art_rng = SeededRng::derive(spec.seed, kStreamTestFakeArtifact);
  SeededRng shifted_rng = SeededRng::derive(spec.seed, kStreamShifted);
  SeededRng mis_rng = SeededRng::derive(spec.seed, kStreamMisartifact);

  std::vector<std::vector<Vector>> per_mode_train(spec.real_modes.size());
  for (std::size_t m = 0; m < spec.real_modes.size(); ++m) {
    const GaussianMode& mode = spec.real_modes[m];
    for (std::size_t i = 0; i < mode.count; ++i) {
      Sample s;
      s.label = 0;
      s.x = sample_from(mode, train_real_rng);
      per_mode_train[m].push_back(s.x);
      data.train.push_back(std::move(s));
    }
  }
  std::vector<Sample> train_fakes =
      draw_fakes(spec.fake, direction, spec.artifact_gamma, spec.fake_artifact_fraction,
                 spec.fake_artifact_jitter, train_fake_rng, train_fake_art_rng);
  for (Sample& s : train_fakes) data.train.push_back(std::move(s));

  for (const GaussianMode& mode : spec.real_modes) {
    for (std::size_t i = 0; i < mode.count; ++i) {
      data.test_iid.push_back({sample_from(mode, test_real_rng), 0});
    }
  }
  std::vector<Sample> test_fakes =
      draw_fakes(spec.fake, direction, spec.artifact_gamma, spec.fake_artifact_fraction,
                 spec.fake_artifact_jitter, test_fake_rng, test_fake_art_rng);
  for (Sample& s : test_fakes) data.test_iid.push_back(std::move(s));

  for (std::size_t i = 0; i < spec.shifted_real.count; ++i) {
    data.shifted_real.push_back({sample_from(spec.shifted_real, shifted_rng), 0});
  }

  // Fresh clean mode draws get the fake-correlated artifact added; the split
  // stays disjoint from test_iid while exercising exactly that perturbation.
  for (const GaussianMode& mode : spec.real_modes) {
    std::size_t count = static_cast<std::size_t>(
        std::llround(spec.artifact_fraction * static_cast<double>(mode.count)));
    for (std::size_t i = 0; i < count; ++i) {
      Vector clean = sample_from(mode, mis_rng);
      Vector perturbed = clean;
      axpy(spec.artifact_gamma, direction, perturbed);
      data.misartifact_clean.push_back(std::move(clean));
      data.misartifact_real.push_back({std::move(perturbed), 0});
    }
  }

  data.real_within_mode_cov_trace = within_mode_trace(per_mode_train);
  data.fake_cov_trace = pooled_trace(data.train, 1);
  Vector fake_mean = class_mean(data.train, 1, data.input_dim);
  Vector real_mean = class_mean(data.train, 0, data.input_dim);
  Vector diff(data.input_dim);
  for (std::size_t i = 0; i < data.input_dim; ++i) diff[i] = fake_mean[i] - real_mean[i];
  data.confound_projection = dot(direction, diff);
  return data;
}

namespace {

void write_split(std::FILE* f, const std::vector<Sample>& samples, SplitTag tag) {
  const char* name = split_tag_name(tag);
  for (const Sample& s : samples) {
    for (double v : s.x) std::fprintf(f, "%s,", format_g17(v).c_str());
    std::fprintf(f, "%d,%s\n", s.label, name);
  }
}

}  // namespace

void write_dataset_csv(const SyntheticDataset& dataset, const std::string& path) {
  FileWriter out(path);
  for (std::size_t i = 0; i < dataset.input_dim; ++i) {
    std::fprintf(out.get(), "x%zu,", i);
  }
  std::fprintf(out.get(), "y,tag\n");
  write_split(out.get(), dataset.train, SplitTag::kTrain);
  write_split(out.get(), dataset.test_iid, SplitTag::kTestIid);
  write_split(out.get(), dataset.shifted_real, SplitTag::kShiftedReal);
  write_split(out.get(), dataset.misartifact_real, SplitTag::kMisartifactReal);
}

SyntheticDataset read_dataset_csv(const std::string& path) {
  std::vector<std::string> lines = read_text_lines(path);
  std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.size() < 3 || header[header.size() - 2] != "y" || header.back() != "tag") {
    throw std::runtime_error(path + ": line 1: expected header x0,...,y,tag");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[i] != "x" + std::to_string(i)) {
      throw std::runtime_error(path + ": line 1: expected header field x" + std::to_string(i) +
                               ", got '" + header[i] + "'");
    }
  }

  SyntheticDataset data;
  data.input_dim = dim;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::size_t line_no = r + 1;
    if (lines[r].empty() && r + 1 == lines.size()) break;  // trailing newline
    std::vector<std::string> fields = split_csv_line(lines[r]);
    if (fields.size() != dim + 2) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected " +
                               std::to_string(dim + 2) + " fields, got " +
                               std::to_string(fields.size()));
    }
    Sample s;
    s.x.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      s.x[i] = parse_double_field(fields[i], line_no, path);
    }
    double label = parse_double_field(fields[dim], line_no, path);
    if (label != 0.0 && label != 1.0) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": label must be 0 or 1");
    }
    s.label = static_cast<int>(label);
    const std::string& tag = fields[dim + 1];
    if (tag == "train") {
      data.train.push_back(std::move(s));
    } else if (tag == "test_iid") {
      data.test_iid.push_back(std::move(s));
    } else if (tag == "shifted_real") {
      data.shifted_real.push_back(std::move(s));
    } else if (tag == "misartifact_real") {
      data.misartifact_real.push_back(std::move(s));
    } else {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": unknown tag '" +
                               tag + "'");
    }
  }
  return data;
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
  FileWriter out(path);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      std::fprintf(out.get(), "%s%s", j == 0 ? "" : ",", format_g17(m(i, j)).c_str());
    }
    std::fprintf(out.get(), "\n");
  }
}

Matrix read_matrix_csv(const std::string& path) {
  std::vector<std::string> lines = read_text_lines(path);
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].empty() && r + 1 == lines.size()) break;
    std::vector<std::string> fields = split_csv_line(lines[r]);
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      row[i] = parse_double_field(fields[i], r + 1, path);
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw std::runtime_error(path + ": line " + std::to_string(r + 1) + ": expected " +
                               std::to_string(rows[0].size()) + " fields, got " +
                               std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty input");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace realid
