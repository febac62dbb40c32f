#include "bfly/lda.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string_view>

#include "bfly/error.hpp"

namespace bfly::lda {
namespace {

// Stream tags keep the init, update and stop streams apart for one seed.
constexpr std::uint64_t kTagInitZ = 0x7a696e6974ULL;
constexpr std::uint64_t kTagInitParams = 0x70696e6974ULL;
constexpr std::uint64_t kTagUpdate = 0x7570646174ULL;
constexpr std::uint64_t kTagStops = 0x73746f7073ULL;
constexpr std::uint64_t kTagTheta = 0x7468657461ULL;
constexpr std::uint64_t kTagPhi = 0x706869ULL;
constexpr std::uint64_t kTagCorpus = 0x636f727075ULL;

// Smallest weight a Dirichlet draw may produce; keeps float runs positive.
constexpr double kWeightFloor = 1e-30;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<long long> parse_ints(std::string_view line, const std::string& where) {
  std::vector<long long> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), value);
    const auto end = static_cast<std::size_t>(ptr - line.data());
    const bool at_separator = end >= line.size() || line[end] == ' ' || line[end] == '\t' || line[end] == '\r';
    if (ec != std::errc{} || !at_separator)
      throw Error(ErrorCode::ParseError, where + ": expected integer, got '" +
                                             std::string(line.substr(pos, line.find_first_of(" \t\r", pos) - pos)) +
                                             "'");
    out.push_back(value);
    pos = end;
  }
  return out;
}

// Log of a Gamma(shape, 1) variate, stable for small shapes.
double log_gamma_variate(double shape, RandomSource& rng) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape)(rng));
  const double g = std::gamma_distribution<double>(shape + 1.0)(rng);
  double u = rng.next_unit();
  while (u == 0.0) u = rng.next_unit();
  return std::log(g) + std::log(u) / shape;
}

// Writes a Dirichlet(concentration) sample into out.
void dirichlet(std::span<const double> concentration, RandomSource& rng, std::span<double> out) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = log_gamma_variate(concentration[k], rng);
    top = std::max(top, out[k]);
  }
  double total = 0.0;
  for (auto& x : out) {
    x = std::exp(x - top);
    total += x;
  }
  for (auto& x : out) x = std::max(x / total, kWeightFloor);
}

}  // namespace

std::size_t Corpus::tokens() const noexcept {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

Corpus parse_corpus(std::istream& in, std::optional<int> vocab, const std::string& source) {
  Corpus corpus;
  std::optional<long long> header_docs;
  std::string line;
  long long max_id = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto body = trim(line);
    if (line_no == 1 && !body.empty() && body.front() == '#') {
      const auto fields = parse_ints(trim(body.substr(1)), where);
      if (fields.size() != 2 || fields[0] < 0 || fields[1] < 1)
        throw Error(ErrorCode::ParseError, where + ": header must be '#M V' with M >= 0, V >= 1");
      header_docs = fields[0];
      if (!vocab) vocab = static_cast<int>(fields[1]);
      continue;
    }
    const auto ids = parse_ints(body, where);
    std::vector<int> doc;
    doc.reserve(ids.size());
    for (const auto id : ids) {
      if (id < 0) throw Error(ErrorCode::WordIdOutOfRange, where + ": negative word id " + std::to_string(id));
      if (vocab && id >= *vocab)
        throw Error(ErrorCode::WordIdOutOfRange,
                    where + ": word id " + std::to_string(id) + " >= V = " + std::to_string(*vocab));
      if (id > std::numeric_limits<int>::max() - 1)
        throw Error(ErrorCode::WordIdOutOfRange, where + ": word id " + std::to_string(id) + " is too large");
      max_id = std::max(max_id, id);
      doc.push_back(static_cast<int>(id));
    }
    corpus.docs.push_back(std::move(doc));
  }
  if (in.bad()) throw Error(ErrorCode::Io, "failed reading " + source);
  // A header may announce trailing empty documents that have no line.
  if (header_docs) {
    if (static_cast<long long>(corpus.docs.size()) > *header_docs)
      throw Error(ErrorCode::ParseError, source + ": header announces " + std::to_string(*header_docs) +
                                             " documents, found " + std::to_string(corpus.docs.size()));
    corpus.docs.resize(static_cast<std::size_t>(*header_docs));
  }
  corpus.vocab = vocab ? *vocab : static_cast<int>(max_id + 1);
  if (corpus.vocab < 1) corpus.vocab = 1;
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, std::optional<int> vocab) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open corpus '" + path.string() + "'");
  return parse_corpus(in, vocab, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << '#' << corpus.real_docs() << ' ' << corpus.vocab << '\n';
  for (std::size_t m = 0; m < corpus.real_docs(); ++m) {
    const auto& doc = corpus.docs[m];
    for (std::size_t i = 0; i < doc.size(); ++i) out << (i ? " " : "") << doc[i];
    out << '\n';
  }
}

void pad_to_multiple(Corpus& corpus, int width) {
  if (width < 1) throw Error(ErrorCode::InvalidConfig, "padding width must be positive");
  const auto w = static_cast<std::size_t>(width);
  const auto extra = (w - corpus.docs.size() % w) % w;
  corpus.docs.resize(corpus.docs.size() + extra);
  corpus.padding += extra;
}

PlantedCorpus generate_planted_corpus(int topics, int vocab, int docs, int doc_len, std::uint64_t seed,
                                      double noise) {
  if (topics < 1 || vocab < topics || docs < 0 || doc_len < 0 || !(noise >= 0.0 && noise <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "planted corpus needs K >= 1, V >= K, M >= 0, length >= 0, noise in [0,1]");
  PlantedCorpus out;
  out.corpus.vocab = vocab;
  out.corpus.docs.resize(static_cast<std::size_t>(docs));
  out.doc_topic.resize(static_cast<std::size_t>(docs));
  const auto slice_begin = [&](int t) { return static_cast<int>(static_cast<long long>(t) * vocab / topics); };
  for (int m = 0; m < docs; ++m) {
    auto rng = RandomSource::derive({seed, kTagCorpus, static_cast<std::uint64_t>(m)});
    const int planted = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(topics)));
    out.doc_topic[static_cast<std::size_t>(m)] = planted;
    auto& doc = out.corpus.docs[static_cast<std::size_t>(m)];
    doc.reserve(static_cast<std::size_t>(doc_len));
    for (int i = 0; i < doc_len; ++i) {
      int t = planted;
      if (topics > 1 && rng.next_unit() < noise) {
        t = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(topics - 1)));
        if (t >= planted) ++t;
      }
      const int lo = slice_begin(t);
      const int width = slice_begin(t + 1) - lo;
      doc.push_back(lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(width))));
    }
  }
  return out;
}

void resample_params(const Corpus& corpus, const ZMatrix& z, ModelParams& params, double alpha, double beta,
                     std::uint64_t seed) {
  const std::size_t m_count = corpus.size();
  const std::size_t v_count = static_cast<std::size_t>(corpus.vocab);
  const std::size_t k_count = params.theta.cols();
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error(ErrorCode::InvalidConfig, "Dirichlet priors must be positive");
  if (z.size() != m_count) throw Error(ErrorCode::InvalidConfig, "z does not match the corpus");

  Matrix<double> doc_counts(m_count, k_count, alpha);
  Matrix<double> word_counts(k_count, v_count, beta);  // topic-major for contiguous Dirichlet draws
  for (std::size_t m = 0; m < m_count; ++m) {
    const auto& doc = corpus.docs[m];
    if (z[m].size() != doc.size()) throw Error(ErrorCode::InvalidConfig, "z does not match the corpus");
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const auto k = static_cast<std::size_t>(z[m][i]);
      if (k >= k_count) throw Error(ErrorCode::InvalidConfig, "topic id outside [0, K)");
      doc_counts(m, k) += 1.0;
      word_counts(k, static_cast<std::size_t>(doc[i])) += 1.0;
    }
  }

  params.theta = Matrix<double>(m_count, k_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    auto rng = RandomSource::derive({seed, kTagTheta, m});
    dirichlet(doc_counts.row(m), rng, params.theta.row(m));
  }
  params.phi = Matrix<double>(v_count, k_count);
  std::vector<double> column(v_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    auto rng = RandomSource::derive({seed, kTagPhi, k});
    dirichlet(word_counts.row(k), rng, column);
    for (std::size_t v = 0; v < v_count; ++v) params.phi(v, k) = column[v];
  }
}

GibbsState initialize(const Corpus& corpus, int topics, std::uint64_t seed, const GibbsOptions& options) {
  if (topics < 1) throw Error(ErrorCode::InvalidConfig, "K must be at least 1");
  GibbsState state;
  state.z.resize(corpus.size());
  for (std::size_t m = 0; m < corpus.size(); ++m) {
    auto rng = RandomSource::derive({seed, kTagInitZ, m});
    state.z[m].resize(corpus.docs[m].size());
    for (auto& t : state.z[m]) t = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(topics)));
  }
  state.params.theta = Matrix<double>(corpus.size(), static_cast<std::size_t>(topics));
  resample_params(corpus, state.z, state.params, options.alpha, options.beta, hash_keys({seed, kTagInitParams}));
  return state;
}

KernelRun gibbs_iterate(const Corpus& corpus, GibbsState& state, const GibbsOptions& options,
                        const UniformSource& uniforms, std::uint64_t update_seed) {
  auto run = draw_z_in(options.precision, options.kernel, state.params.theta, state.params.phi, corpus.docs, uniforms,
                       options.kernel_options);
  state.z = run.z;
  resample_params(corpus, state.z, state.params, options.alpha, options.beta, update_seed);
  return run;
}

double log_likelihood(const Corpus& corpus, const ModelParams& params) {
  const std::size_t k_count = params.theta.cols();
  std::vector<double> phi_total(k_count, 0.0);
  for (std::size_t v = 0; v < params.phi.rows(); ++v)
    for (std::size_t k = 0; k < k_count; ++k) phi_total[k] += params.phi(v, k);
  for (std::size_t k = 0; k < k_count; ++k)
    if (!(phi_total[k] > 0.0)) throw Error(ErrorCode::AllZero, "phi column " + std::to_string(k) + " sums to zero");

  double ll = 0.0;
  for (std::size_t m = 0; m < corpus.size(); ++m) {
    const auto& doc = corpus.docs[m];
    if (doc.empty()) continue;
    double theta_total = 0.0;
    for (const double x : params.theta.row(m)) theta_total += x;
    if (!(theta_total > 0.0)) throw Error(ErrorCode::AllZero, "theta row " + std::to_string(m) + " sums to zero");
    for (const int w : doc) {
      double p = 0.0;
      for (std::size_t k = 0; k < k_count; ++k)
        p += params.theta(m, k) / theta_total * (params.phi(static_cast<std::size_t>(w), k) / phi_total[k]);
      ll += std::log(p);
    }
  }
  return ll;
}

std::vector<int> modal_topics(const ZMatrix& z, int topics) {
  std::vector<int> out;
  out.reserve(z.size());
  std::vector<int> counts(static_cast<std::size_t>(std::max(topics, 1)));
  for (const auto& doc : z) {
    if (doc.empty()) {
      out.push_back(-1);
      continue;
    }
    std::fill(counts.begin(), counts.end(), 0);
    for (const int t : doc) ++counts.at(static_cast<std::size_t>(t));
    out.push_back(static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
  }
  return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidConfig, "label vectors differ in length");
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  const auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [key, c] : joint) index += pairs(c);
  double sum_a = 0.0;
  for (const auto& [key, c] : rows) sum_a += pairs(c);
  double sum_b = 0.0;
  for (const auto& [key, c] : cols) sum_b += pairs(c);
  const double expected = sum_a * sum_b / pairs(n);
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) return index == expected ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

RunResult run(Corpus corpus, const RunOptions& options) {
  if (options.iterations < 1) throw Error(ErrorCode::InvalidConfig, "iterations must be at least 1");
  options.gibbs.kernel_options.warp.validate();
  pad_to_multiple(corpus, options.gibbs.kernel_options.warp.width);

  std::optional<InjectedUniforms> fixed;
  if (options.stops == StopMode::injected_fixed) {
    if (!options.injected) throw Error(ErrorCode::InvalidConfig, "fixed stop injection needs a value table");
    fixed.emplace(corpus.docs, *options.injected);
  }

  RunResult result;
  result.state = initialize(corpus, options.topics, options.seed, options.gibbs);
  result.log_likelihood.reserve(static_cast<std::size_t>(options.iterations));
  for (int it = 0; it < options.iterations; ++it) {
    const auto iter = static_cast<std::uint64_t>(it);
    const auto stop_seed = hash_keys({options.seed, kTagStops, iter});
    const auto update_seed = hash_keys({options.seed, kTagUpdate, iter});
    switch (options.stops) {
      case StopMode::hashed:
        gibbs_iterate(corpus, result.state, options.gibbs, HashedUniforms(stop_seed), update_seed);
        break;
      case StopMode::injected_seeded:
        gibbs_iterate(corpus, result.state, options.gibbs, InjectedUniforms::generate(corpus.docs, stop_seed),
                      update_seed);
        break;
      case StopMode::injected_fixed:
        gibbs_iterate(corpus, result.state, options.gibbs, *fixed, update_seed);
        break;
    }
    result.log_likelihood.push_back(log_likelihood(corpus, result.state.params));
  }
  result.state.z.resize(corpus.real_docs());
  return result;
}

void write_z_csv(std::ostream& out, const ZMatrix& z, std::size_t real_docs) {
  out << "doc,pos,topic\n";
  for (std::size_t m = 0; m < std::min(real_docs, z.size()); ++m)
    for (std::size_t i = 0; i < z[m].size(); ++i) out << m << ',' << i << ',' << z[m][i] << '\n';
}

void write_matrix_csv(std::ostream& out, const Matrix<double>& m) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace bfly::lda
