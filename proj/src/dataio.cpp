#include "mlc/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mlc {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

[[noreturn]] void parse_error(const std::string& origin, int line, const std::string& what) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

long parse_int(std::string_view token, const std::string& origin, int line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    parse_error(origin, line, "bad integer '" + std::string(token) + "'");
  return value;
}

double parse_double(std::string_view token, const std::string& origin, int line) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    parse_error(origin, line, "bad value '" + std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(start, end - start));
    start = end + 1;
    if (end == s.size()) break;
  }
  return out;
}

}  // namespace

std::string format_dataset(const MultiLabelDataset& dataset) {
  std::string out = "#meta N=" + std::to_string(dataset.size()) +
                    " D=" + std::to_string(dataset.num_features) +
                    " L=" + std::to_string(dataset.num_labels) + "\n";
  for (int i = 0; i < dataset.size(); ++i) {
    const auto& labels = dataset.labels[i].labels();
    for (size_t j = 0; j < labels.size(); ++j) {
      if (j) out += ',';
      out += std::to_string(labels[j]);
    }
    out += '\t';
    const auto& entries = dataset.instances[i].entries();
    for (size_t j = 0; j < entries.size(); ++j) {
      if (j) out += ' ';
      out += std::to_string(entries[j].index);
      out += ':';
      out += format_double(entries[j].value);
    }
    out += '\n';
  }
  return out;
}

MultiLabelDataset parse_dataset_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int header_n = -1, header_d = -1, header_l = -1;
  bool has_header = false;

  struct Row {
    std::vector<int> labels;
    std::vector<SparseInstance::Entry> entries;
    int line;
  };
  std::vector<Row> rows;
  int max_label = -1, max_feature = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#meta", 0) == 0) {
        has_header = true;
        std::istringstream hs(line.substr(5));
        std::string kv;
        while (hs >> kv) {
          auto eq = kv.find('=');
          if (eq == std::string::npos) parse_error(origin, line_no, "bad #meta token");
          const std::string key = kv.substr(0, eq);
          const long value = parse_int(kv.substr(eq + 1), origin, line_no);
          if (key == "N") header_n = static_cast<int>(value);
          else if (key == "D") header_d = static_cast<int>(value);
          else if (key == "L") header_l = static_cast<int>(value);
          else parse_error(origin, line_no, "unknown #meta key " + key);
        }
      }
      continue;
    }
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) parse_error(origin, line_no, "missing TAB separator");
    Row row;
    row.line = line_no;
    const std::string_view label_part(line.data(), tab);
    if (!label_part.empty()) {
      for (std::string_view token : split_view(label_part, ',')) {
        const long id = parse_int(token, origin, line_no);
        if (id < 0) parse_error(origin, line_no, "negative label id");
        if (!row.labels.empty() && id <= row.labels.back())
          parse_error(origin, line_no, "label ids not strictly increasing");
        row.labels.push_back(static_cast<int>(id));
        max_label = std::max(max_label, static_cast<int>(id));
      }
    }
    const std::string_view feature_part(line.data() + tab + 1, line.size() - tab - 1);
    if (!feature_part.empty()) {
      for (std::string_view token : split_view(feature_part, ' ')) {
        if (token.empty()) parse_error(origin, line_no, "empty feature token");
        const size_t colon = token.find(':');
        if (colon == std::string_view::npos)
          parse_error(origin, line_no, "feature token missing ':'");
        const long idx = parse_int(token.substr(0, colon), origin, line_no);
        const double value = parse_double(token.substr(colon + 1), origin, line_no);
        if (idx < 0) parse_error(origin, line_no, "negative feature index");
        if (!row.entries.empty() && idx <= row.entries.back().index)
          parse_error(origin, line_no, "feature indices not strictly increasing");
        row.entries.push_back({static_cast<int>(idx), value});
        max_feature = std::max(max_feature, static_cast<int>(idx));
      }
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw std::runtime_error(origin + ": no data rows");
  MultiLabelDataset dataset;
  dataset.num_features = has_header && header_d >= 0 ? header_d : max_feature + 1;
  dataset.num_labels = has_header && header_l >= 0 ? header_l : max_label + 1;
  if (dataset.num_features < 1)
    throw std::runtime_error(origin + ": feature dimension could not be inferred");
  if (dataset.num_labels < 1)
    throw std::runtime_error(origin + ": label count could not be inferred");
  if (has_header && header_n >= 0 && header_n != static_cast<int>(rows.size()))
    throw std::runtime_error(origin + ": #meta N does not match row count");

  for (Row& row : rows) {
    if (!row.entries.empty() && row.entries.back().index >= dataset.num_features)
      parse_error(origin, row.line, "feature index >= D");
    for (int id : row.labels)
      if (id >= dataset.num_labels) parse_error(origin, row.line, "label id >= L");
    try {
      dataset.instances.emplace_back(std::move(row.entries), dataset.num_features);
      dataset.labels.emplace_back(std::move(row.labels), dataset.num_labels);
    } catch (const std::invalid_argument& e) {
      parse_error(origin, row.line, e.what());
    }
  }
  dataset.validate();
  return dataset;
}

MultiLabelDataset parse_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_text(buffer.str(), path);
}

void write_dataset(const MultiLabelDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  out << format_dataset(dataset);
}

std::pair<MultiLabelDataset, MultiLabelDataset> split_train_validation(
    const MultiLabelDataset& dataset, double fraction, std::uint64_t seed) {
  dataset.validate();
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split: fraction must be in (0,1)");
  const int n = dataset.size();
  const int n_validation = static_cast<int>(std::lround(fraction * n));
  if (n_validation < 1 || n_validation >= n)
    throw std::invalid_argument("split: degenerate part sizes");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> val_ids(order.begin(), order.begin() + n_validation);
  std::vector<int> train_ids(order.begin() + n_validation, order.end());
  std::sort(val_ids.begin(), val_ids.end());
  std::sort(train_ids.begin(), train_ids.end());

  auto take = [&](const std::vector<int>& ids) {
    MultiLabelDataset part;
    part.num_features = dataset.num_features;
    part.num_labels = dataset.num_labels;
    part.label_names = dataset.label_names;
    part.feature_names = dataset.feature_names;
    for (int i : ids) {
      part.instances.push_back(dataset.instances[i]);
      part.labels.push_back(dataset.labels[i]);
    }
    return part;
  };
  return {take(train_ids), take(val_ids)};
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.d < 1 || spec.l < 1 || spec.k_true < 1)
    throw std::invalid_argument("generate_synthetic: bad spec");
  if (spec.noise_rate < 0 || spec.noise_rate >= 1 || spec.irrelevant_feature_fraction < 0 ||
      spec.irrelevant_feature_fraction >= 1)
    throw std::invalid_argument("generate_synthetic: bad rates");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n_noise = static_cast<int>(std::lround(spec.d * spec.irrelevant_feature_fraction));
  const int n_relevant = spec.d - n_noise;
  if (n_relevant < spec.k_true)
    throw std::invalid_argument("generate_synthetic: not enough relevant features for clusters");

  SyntheticData data;
  data.feature_relevant.assign(spec.d, 0);
  for (int d = 0; d < n_relevant; ++d) data.feature_relevant[d] = 1;

  // Cluster k owns relevant-feature slice [k*per, (k+1)*per) and the labels
  // congruent to k mod K.
  const int per_cluster = n_relevant / spec.k_true;
  for (int k = 0; k < spec.k_true; ++k) {
    std::vector<int> labels;
    for (int l = k; l < spec.l; l += spec.k_true) labels.push_back(l);
    data.cluster_label_sets.emplace_back(std::move(labels), spec.l);
  }

  data.dataset.num_features = spec.d;
  data.dataset.num_labels = spec.l;
  data.true_marginals = Eigen::MatrixXd::Zero(spec.n, spec.l);

  std::uniform_int_distribution<int> pick_cluster(0, spec.k_true - 1);
  for (int i = 0; i < spec.n; ++i) {
    const int k = pick_cluster(rng);
    data.cluster_ids.push_back(k);
    const int lo = k * per_cluster;
    const int hi = k + 1 == spec.k_true ? n_relevant : (k + 1) * per_cluster;

    std::vector<SparseInstance::Entry> entries;
    for (int d = lo; d < hi; ++d)
      if (unit(rng) < 0.5) entries.push_back({d, 1.0});
    if (entries.empty()) entries.push_back({lo + static_cast<int>(rng() % (hi - lo)), 1.0});
    for (int d = n_relevant; d < spec.d; ++d)
      if (unit(rng) < 0.5) entries.push_back({d, 1.0});
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    data.dataset.instances.emplace_back(std::move(entries), spec.d);

    std::vector<int> labels;
    for (int l = 0; l < spec.l; ++l) {
      const bool base = data.cluster_label_sets[k].contains(l);
      const bool flip = unit(rng) < spec.noise_rate;
      if (base != flip) labels.push_back(l);
      data.true_marginals(i, l) = base ? 1.0 - spec.noise_rate : spec.noise_rate;
    }
    data.dataset.labels.emplace_back(std::move(labels), spec.l);
  }
  data.dataset.validate();
  return data;
}

// ---- Model archives ----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'L', 'C', 'A'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const void* p, size_t n) { buf_.append(static_cast<const char*>(p), n); }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string buf) : buf_(std::move(buf)) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(buf_.at(advance(1))); }
  std::uint32_t u32() { std::uint32_t v; copy(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; copy(&v, sizeof v); return v; }
  double f64() { double v; copy(&v, sizeof v); return v; }
  std::string str() {
    const std::uint32_t n = u32();
    const size_t off = advance(n);
    return buf_.substr(off, n);
  }
  size_t position() const { return pos_; }
  const std::string& buffer() const { return buf_; }

 private:
  size_t advance(size_t n) {
    if (pos_ + n > buf_.size()) throw std::runtime_error("archive truncated");
    const size_t off = pos_;
    pos_ += n;
    return off;
  }
  void copy(void* out, size_t n) { std::memcpy(out, buf_.data() + advance(n), n); }
  std::string buf_;
  size_t pos_ = 0;
};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_linear_model(Writer& w, const LinearModel& m) {
  w.u32(static_cast<std::uint32_t>(m.num_classes()));
  w.u32(static_cast<std::uint32_t>(m.dimension()));
  for (int c = 0; c < m.num_classes(); ++c) w.f64(m.intercepts()[c]);
  for (int c = 0; c < m.num_classes(); ++c) {
    std::uint32_t nnz = 0;
    for (int d = 0; d < m.dimension(); ++d)
      if (m.weights()(c, d) != 0.0) ++nnz;
    w.u32(nnz);
    for (int d = 0; d < m.dimension(); ++d)
      if (m.weights()(c, d) != 0.0) {
        w.u32(static_cast<std::uint32_t>(d));
        w.f64(m.weights()(c, d));
      }
  }
}

LinearModel read_linear_model(Reader& r) {
  const int num_classes = static_cast<int>(r.u32());
  const int dim = static_cast<int>(r.u32());
  LinearModel m(num_classes, dim);
  for (int c = 0; c < num_classes; ++c) m.intercepts()[c] = r.f64();
  for (int c = 0; c < num_classes; ++c) {
    const std::uint32_t nnz = r.u32();
    for (std::uint32_t j = 0; j < nnz; ++j) {
      const int d = static_cast<int>(r.u32());
      m.weights()(c, d) = r.f64();
    }
  }
  return m;
}

void write_label_vector(Writer& w, const LabelVector& y) {
  w.u32(static_cast<std::uint32_t>(y.cardinality()));
  for (int l : y.labels()) w.u32(static_cast<std::uint32_t>(l));
}

LabelVector read_label_vector(Reader& r, int label_space) {
  const std::uint32_t card = r.u32();
  std::vector<int> ids(card);
  for (auto& id : ids) id = static_cast<int>(r.u32());
  return LabelVector(std::move(ids), label_space);
}

void write_support(Writer& w, const SupportSet& support) {
  w.u32(static_cast<std::uint32_t>(support.size()));
  for (int j = 0; j < support.size(); ++j) {
    write_label_vector(w, support.combinations()[j]);
    w.u32(static_cast<std::uint32_t>(support.counts()[j]));
  }
}

SupportSet read_support(Reader& r, int label_space) {
  const std::uint32_t size = r.u32();
  std::vector<LabelVector> combos;
  std::vector<int> counts;
  for (std::uint32_t j = 0; j < size; ++j) {
    combos.push_back(read_label_vector(r, label_space));
    counts.push_back(static_cast<int>(r.u32()));
  }
  return SupportSet(std::move(combos), std::move(counts));
}

void write_payload(Writer& w, const AnyModel& model) {
  switch (kind_of(model)) {
    case ModelKind::br: {
      const auto& m = std::get<BrModel>(model);
      w.u32(static_cast<std::uint32_t>(m.num_labels()));
      for (const auto& lm : m.label_models()) write_linear_model(w, lm);
      break;
    }
    case ModelKind::pcc: {
      const auto& m = std::get<PccModel>(model);
      w.u32(static_cast<std::uint32_t>(m.num_labels()));
      for (int l : m.order()) w.u32(static_cast<std::uint32_t>(l));
      for (const auto& lm : m.chain_models()) write_linear_model(w, lm);
      break;
    }
    case ModelKind::cbm: {
      const auto& m = std::get<CbmModel>(model);
      w.u32(static_cast<std::uint32_t>(m.num_components()));
      w.u32(static_cast<std::uint32_t>(m.num_labels()));
      write_linear_model(w, m.gating());
      for (const auto& comp : m.components())
        for (const auto& lm : comp) write_linear_model(w, lm);
      break;
    }
    case ModelKind::crf: {
      const auto& m = std::get<CrfModel>(model);
      w.u32(static_cast<std::uint32_t>(m.num_labels()));
      w.u32(static_cast<std::uint32_t>(m.feature_dim()));
      w.u8(m.include_pairwise() ? 1 : 0);
      for (int l = 0; l < m.num_labels(); ++l) {
        std::uint32_t nnz = 0;
        for (int d = 0; d <= m.feature_dim(); ++d)
          if (m.unary()(l, d) != 0.0) ++nnz;
        w.u32(nnz);
        for (int d = 0; d <= m.feature_dim(); ++d)
          if (m.unary()(l, d) != 0.0) {
            w.u32(static_cast<std::uint32_t>(d));
            w.f64(m.unary()(l, d));
          }
      }
      if (m.include_pairwise()) {
        for (int p = 0; p < m.num_pairs(); ++p)
          for (int t = 0; t < 4; ++t) w.f64(m.pairwise()(p, t));
      }
      write_support(w, m.support());
      break;
    }
    case ModelKind::lsf: {
      const auto& m = std::get<LsfModel>(model);
      w.u32(static_cast<std::uint32_t>(m.num_labels));
      w.u32(static_cast<std::uint32_t>(m.feature_dim));
      for (const auto& lm : m.marginal_models) write_linear_model(w, lm);
      for (const auto& lm : m.cardinality_models) write_linear_model(w, lm);
      write_linear_model(w, m.empty_model);
      break;
    }
  }
}

AnyModel read_payload(Reader& r, ModelKind kind) {
  switch (kind) {
    case ModelKind::br: {
      const int num_labels = static_cast<int>(r.u32());
      std::vector<LinearModel> models;
      for (int l = 0; l < num_labels; ++l) models.push_back(read_linear_model(r));
      return BrModel(std::move(models));
    }
    case ModelKind::pcc: {
      const int num_labels = static_cast<int>(r.u32());
      std::vector<int> order(num_labels);
      for (auto& o : order) o = static_cast<int>(r.u32());
      std::vector<LinearModel> models;
      for (int l = 0; l < num_labels; ++l) models.push_back(read_linear_model(r));
      return PccModel(std::move(order), std::move(models));
    }
    case ModelKind::cbm: {
      const int k = static_cast<int>(r.u32());
      const int num_labels = static_cast<int>(r.u32());
      LinearModel gating = read_linear_model(r);
      std::vector<std::vector<LinearModel>> comps(k);
      for (int c = 0; c < k; ++c)
        for (int l = 0; l < num_labels; ++l) comps[c].push_back(read_linear_model(r));
      return CbmModel(std::move(gating), std::move(comps));
    }
    case ModelKind::crf: {
      const int num_labels = static_cast<int>(r.u32());
      const int dim = static_cast<int>(r.u32());
      const bool pairwise = r.u8() != 0;
      Eigen::MatrixXd unary = Eigen::MatrixXd::Zero(num_labels, dim + 1);
      for (int l = 0; l < num_labels; ++l) {
        const std::uint32_t nnz = r.u32();
        for (std::uint32_t j = 0; j < nnz; ++j) {
          const int d = static_cast<int>(r.u32());
          unary(l, d) = r.f64();
        }
      }
      Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(num_labels * (num_labels - 1) / 2, 4);
      if (pairwise)
        for (int p = 0; p < pair.rows(); ++p)
          for (int t = 0; t < 4; ++t) pair(p, t) = r.f64();
      SupportSet support = read_support(r, num_labels);
      CrfModel model(num_labels, dim, pairwise, std::move(support));
      model.unary() = std::move(unary);
      model.pairwise() = std::move(pair);
      return model;
    }
    case ModelKind::lsf: {
      LsfModel m;
      m.num_labels = static_cast<int>(r.u32());
      m.feature_dim = static_cast<int>(r.u32());
      for (int l = 0; l < m.num_labels; ++l) m.marginal_models.push_back(read_linear_model(r));
      for (int l = 0; l < m.num_labels; ++l) m.cardinality_models.push_back(read_linear_model(r));
      m.empty_model = read_linear_model(r);
      return m;
    }
  }
  throw std::logic_error("read_payload: bad kind");
}

void count_linear(const LinearModel& m, int original_dim, std::int64_t& nonzeros,
                  std::set<int>& features) {
  for (int c = 0; c < m.num_classes(); ++c)
    for (int d = 0; d < m.dimension(); ++d)
      if (m.weights()(c, d) != 0.0) {
        ++nonzeros;
        if (d < original_dim) features.insert(d);
      }
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::br: return "br";
    case ModelKind::pcc: return "pcc";
    case ModelKind::cbm: return "cbm";
    case ModelKind::crf: return "crf";
    case ModelKind::lsf: return "lsf";
  }
  throw std::logic_error("bad model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "br") return ModelKind::br;
  if (name == "pcc") return ModelKind::pcc;
  if (name == "cbm") return ModelKind::cbm;
  if (name == "crf") return ModelKind::crf;
  if (name == "lsf") return ModelKind::lsf;
  throw std::invalid_argument("unknown model kind: " + name);
}

ModelKind kind_of(const AnyModel& model) {
  return static_cast<ModelKind>(model.index());
}

ArchiveStats model_stats(const AnyModel& model) {
  ArchiveStats stats;
  std::set<int> features;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BrModel>) {
          for (const auto& lm : m.label_models())
            count_linear(lm, m.feature_dim(), stats.nonzero_weight_count, features);
        } else if constexpr (std::is_same_v<T, PccModel>) {
          for (const auto& lm : m.chain_models())
            count_linear(lm, m.feature_dim(), stats.nonzero_weight_count, features);
        } else if constexpr (std::is_same_v<T, CbmModel>) {
          count_linear(m.gating(), m.feature_dim(), stats.nonzero_weight_count, features);
          for (const auto& comp : m.components())
            for (const auto& lm : comp)
              count_linear(lm, m.feature_dim(), stats.nonzero_weight_count, features);
        } else if constexpr (std::is_same_v<T, CrfModel>) {
          for (int l = 0; l < m.num_labels(); ++l)
            for (int d = 0; d <= m.feature_dim(); ++d)
              if (m.unary()(l, d) != 0.0) {
                ++stats.nonzero_weight_count;
                if (d < m.feature_dim()) features.insert(d);
              }
          stats.nonzero_weight_count += (m.pairwise().array() != 0.0).count();
        } else if constexpr (std::is_same_v<T, LsfModel>) {
          for (const auto& lm : m.marginal_models)
            count_linear(lm, m.feature_dim, stats.nonzero_weight_count, features);
          for (const auto& lm : m.cardinality_models)
            count_linear(lm, m.feature_dim, stats.nonzero_weight_count, features);
          count_linear(m.empty_model, m.feature_dim, stats.nonzero_weight_count, features);
        }
      },
      model);
  stats.union_feature_count = static_cast<int>(features.size());

  Writer w;
  write_payload(w, model);
  stats.byte_size = w.buffer().size();
  return stats;
}

ArchiveStats save_model(const AnyModel& model, const std::string& path,
                        const nlohmann::json& manifest_in) {
  nlohmann::json manifest = manifest_in;
  manifest["kind"] = model_kind_name(kind_of(model));
  manifest["format_version"] = kVersion;

  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.str(manifest.dump());
  write_payload(w, model);
  const std::uint64_t checksum = fnv1a(w.buffer());
  w.u64(checksum);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model archive: " + path);
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);

  ArchiveStats stats = model_stats(model);
  stats.byte_size = w.buffer().size();
  return stats;
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model archive: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string bytes = buffer.str();
  if (bytes.size() < 4 + 4 + 8) throw std::runtime_error("archive too small: " + path);

  const std::uint64_t stored_checksum =
      [&] {
        std::uint64_t v;
        std::memcpy(&v, bytes.data() + bytes.size() - 8, 8);
        return v;
      }();
  if (fnv1a(std::string_view(bytes.data(), bytes.size() - 8)) != stored_checksum)
    throw std::runtime_error("archive checksum failure: " + path);

  Reader r(std::move(bytes));
  char magic[4];
  std::memcpy(magic, r.buffer().data(), 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad archive magic: " + path);
  Reader body(r.buffer().substr(4, r.buffer().size() - 4 - 8));
  const std::uint32_t version = body.u32();
  if (version != kVersion)
    throw std::runtime_error("archive version mismatch: " + std::to_string(version));
  LoadedModel loaded{BrModel{}, nlohmann::json::parse(body.str())};
  loaded.model = read_payload(body, model_kind_from_name(loaded.manifest.at("kind")));
  return loaded;
}

}  // namespace mlc
