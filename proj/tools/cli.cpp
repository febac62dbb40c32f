#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "bfly/bench.hpp"
#include "bfly/butterfly.hpp"
#include "bfly/dist.hpp"
#include "bfly/error.hpp"
#include "bfly/lda.hpp"

namespace bfly::cli {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out.exceptions(std::ios::badbit);
  return out;
}

// Options shared by several subcommands.
struct Common {
  int width = 32;
  std::uint64_t seed = 0;
  std::string precision = "double";
  unsigned threads = 1;
};

void add_width(CLI::App* app, Common& c) {
  app->add_option("--w", c.width, "warp width W (power of two, 2..64)")->capture_default_str();
}
void add_seed(CLI::App* app, Common& c) { app->add_option("--seed", c.seed, "random seed")->capture_default_str(); }
void add_precision(CLI::App* app, Common& c) {
  app->add_option("--precision", c.precision, "single or double")
      ->check(CLI::IsMember({"single", "double"}))
      ->capture_default_str();
}
void add_threads(CLI::App* app, Common& c) {
  app->add_option("--threads", c.threads, "worker threads for warp groups")->check(CLI::Range(1U, 256U));
}

simt::WarpConfig warp_config(const Common& c) {
  simt::WarpConfig cfg{c.width, parse_precision(c.precision) == Precision::single ? 4 : 8, 128};
  cfg.validate();
  return cfg;
}

// -- verify -------------------------------------------------------------------

struct VerifyArgs {
  Common common{8, 42};
  int topics = 19;
  int trials = 100;
  int instances = 10000;
  std::string csv;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  VerifyConfig cfg;
  cfg.width = a.common.width;
  cfg.topics = a.topics;
  cfg.seed = a.common.seed;
  cfg.precision = parse_precision(a.common.precision);
  cfg.trials = a.trials;
  cfg.search_instances = a.instances;
  const auto results = run_verification(cfg);

  out << table_shape(cfg.width, cfg.topics);
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(13) << r.name << std::right
        << " compared=" << r.compared << " mismatches=" << r.failures;
    if (r.max_rel_error > 0) out << " max_rel_error=" << std::scientific << std::setprecision(3) << r.max_rel_error << std::defaultfloat;
    out << '\n';
  }
  if (!a.csv.empty()) {
    auto file = open_out(a.csv);
    file << "check,passed,compared,mismatches,max_rel_error\n";
    for (const auto& r : results)
      file << r.name << ',' << (r.passed ? 1 : 0) << ',' << r.compared << ',' << r.failures << ','
           << std::setprecision(6) << r.max_rel_error << '\n';
  }
  out << (ok ? "verify: all checks passed\n" : "verify: FAILED\n");
  return ok ? kOk : kCheckFailed;
}

// -- sample -------------------------------------------------------------------

struct SampleArgs {
  Common common{32, 0};
  std::string weights;
  std::uint64_t n = 1'000'000;
  std::string method = "binary";
  std::string out;
};

std::vector<std::size_t> sample_butterfly(const std::vector<double>& weights, std::uint64_t n, const Common& c) {
  const auto cfg = warp_config(c);
  const int w = cfg.width;
  Matrix<double> prod(static_cast<std::size_t>(w), weights.size());
  for (int r = 0; r < w; ++r)
    for (std::size_t k = 0; k < weights.size(); ++k) prod(static_cast<std::size_t>(r), k) = weights[k];
  simt::Warp warp(cfg);
  const auto table = butterfly_table_from_products(warp, prod, simt::GlobalLayout::block_aligned);
  RandomSource rng(c.seed);
  std::vector<std::size_t> draws;
  draws.reserve(n);
  while (draws.size() < n) {
    const auto stop = simt::lanewise<double>(w, [&](int r) { return dist::stop_value(table.sum[r], rng.next_unit()); });
    const auto got = butterfly_search(warp, table, stop);
    for (int r = 0; r < w && draws.size() < n; ++r) draws.push_back(static_cast<std::size_t>(got[r]));
  }
  return draws;
}

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  const auto weights = dist::read_weights_file(a.weights);
  dist::validate_weights(weights);
  std::vector<std::size_t> draws;
  if (a.method == "butterfly") {
    draws = sample_butterfly(weights, a.n, a.common);
  } else {
    RandomSource rng(a.common.seed);
    draws.reserve(a.n);
    if (a.method == "alias") {
      const auto table = dist::build_alias_vose(weights);
      for (std::uint64_t i = 0; i < a.n; ++i) draws.push_back(dist::alias_draw(table, rng));
    } else {
      const auto table = dist::build_prefix(weights);
      for (std::uint64_t i = 0; i < a.n; ++i) draws.push_back(dist::draw(table, rng));
    }
  }
  if (a.n == 0) return kOk;

  if (!a.out.empty()) {
    auto file = open_out(a.out);
    for (const auto d : draws) file << d << '\n';
  }
  std::vector<std::uint64_t> counts(weights.size());
  for (const auto d : draws) ++counts[d];
  const auto table = dist::build_prefix(weights);
  std::vector<double> expected(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) expected[k] = weights[k] / table.total;

  out << "index,weight,expected,observed\n";
  for (std::size_t k = 0; k < weights.size(); ++k)
    out << k << ',' << weights[k] << ',' << std::fixed << std::setprecision(6) << expected[k] << std::defaultfloat
        << ',' << counts[k] << '\n';
  const auto live = std::count_if(expected.begin(), expected.end(), [](double e) { return e > 0; });
  if (live < 2) {
    out << "chi2: skipped (fewer than two outcomes with positive weight)\n";
    return kOk;
  }
  const auto chi = bench::chi_square(counts, expected);
  const double critical = bench::chi_square_critical(chi.dof, 0.001);
  const bool pass = chi.statistic < critical;
  out << "chi2 method=" << a.method << " n=" << a.n << " statistic=" << std::fixed << std::setprecision(4)
      << chi.statistic << " dof=" << chi.dof << " critical(0.001)=" << critical << std::defaultfloat << ' '
      << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kOk : kCheckFailed;
}

// -- lda ----------------------------------------------------------------------

struct LdaArgs {
  Common common{32, 0};
  std::string corpus;
  std::optional<int> vocab;
  int topics = 4;
  int iters = 100;
  std::string kernel = "butterfly";
  std::string stop_inject;
  bool shared_stops = false;
  std::string out = "lda_out";
  double alpha = 0.1;
  double beta = 0.01;
};

int cmd_lda(const LdaArgs& a, std::ostream& out) {
  const auto corpus = lda::load_corpus(a.corpus, a.vocab);
  lda::RunOptions o;
  o.topics = a.topics;
  o.iterations = a.iters;
  o.seed = a.common.seed;
  o.gibbs.alpha = a.alpha;
  o.gibbs.beta = a.beta;
  o.gibbs.kernel = parse_kernel(a.kernel);
  o.gibbs.precision = parse_precision(a.common.precision);
  o.gibbs.kernel_options.warp = warp_config(a.common);
  o.gibbs.kernel_options.threads = a.common.threads;
  if (!a.stop_inject.empty()) {
    o.stops = lda::StopMode::injected_fixed;
    o.injected = dist::read_weights_file(a.stop_inject);
  } else if (a.shared_stops) {
    o.stops = lda::StopMode::injected_seeded;
  }
  const auto result = lda::run(corpus, o);

  const fs::path dir(a.out);
  {
    auto f = open_out(dir / "z.csv");
    lda::write_z_csv(f, result.state.z, corpus.real_docs());
  }
  {
    auto f = open_out(dir / "loglik.csv");
    f << "iteration,log_likelihood\n" << std::setprecision(17);
    for (std::size_t i = 0; i < result.log_likelihood.size(); ++i) f << i + 1 << ',' << result.log_likelihood[i] << '\n';
  }
  {
    Matrix<double> theta(corpus.real_docs(), static_cast<std::size_t>(a.topics));
    for (std::size_t m = 0; m < theta.rows(); ++m)
      for (std::size_t k = 0; k < theta.cols(); ++k) theta(m, k) = result.state.params.theta(m, k);
    auto f = open_out(dir / "theta.csv");
    lda::write_matrix_csv(f, theta);
    auto g = open_out(dir / "phi.csv");
    lda::write_matrix_csv(g, result.state.params.phi);
  }
  out << "lda kernel=" << a.kernel << " K=" << a.topics << " docs=" << corpus.real_docs() << " tokens="
      << corpus.tokens() << " iterations=" << a.iters << '\n'
      << "log-likelihood first=" << std::setprecision(10) << result.log_likelihood.front()
      << " last=" << result.log_likelihood.back() << '\n'
      << "wrote " << (dir / "z.csv").string() << ", loglik.csv, theta.csv, phi.csv\n";
  return kOk;
}

// -- corpus -------------------------------------------------------------------

struct CorpusArgs {
  std::uint64_t seed = 0;
  int topics = 4;
  int vocab = 40;
  int docs = 64;
  int len = 50;
  double noise = 0.05;
  std::string out;
  std::string labels;
};

int cmd_corpus(const CorpusArgs& a, std::ostream& out) {
  const auto planted = lda::generate_planted_corpus(a.topics, a.vocab, a.docs, a.len, a.seed, a.noise);
  if (a.out.empty()) {
    lda::write_corpus(out, planted.corpus);
  } else {
    auto f = open_out(a.out);
    lda::write_corpus(f, planted.corpus);
  }
  if (!a.labels.empty()) {
    auto f = open_out(a.labels);
    f << "doc,topic\n";
    for (std::size_t m = 0; m < planted.doc_topic.size(); ++m) f << m << ',' << planted.doc_topic[m] << '\n';
  }
  return kOk;
}

// -- trace --------------------------------------------------------------------

struct TraceArgs {
  Common common{32, 0, "single"};
  std::string corpus;
  std::vector<int> topics = bench::kDefaultTopics;
  std::vector<std::string> kernels = {"basic", "transposed", "butterfly"};
  std::string out = "sweep.csv";
  std::string report;
  bool timing = false;
};

int cmd_trace(const TraceArgs& a, std::ostream& out) {
  lda::Corpus corpus = a.corpus.empty() ? lda::generate_planted_corpus(4, 40, 64, 50, a.common.seed).corpus
                                        : lda::load_corpus(a.corpus);
  bench::SweepOptions o;
  o.topics = a.topics;
  o.kernels.clear();
  for (const auto& k : a.kernels) o.kernels.push_back(parse_kernel(k));
  o.seed = a.common.seed;
  o.precision = parse_precision(a.common.precision);
  o.kernel.warp = warp_config(a.common);
  o.kernel.threads = a.common.threads;
  const auto sweep = bench::run_sweep(corpus, o);
  {
    auto f = open_out(a.out);
    sweep.write_csv(f, a.timing);
  }
  if (!a.report.empty()) {
    // Per-array detail for every (kernel, K), re-running each draw phase.
    auto f = open_out(a.report);
    f << "K,kernel,array,phase,space,kind,accesses,transactions,scattered,min_txn,max_txn\n";
    lda::pad_to_multiple(corpus, o.kernel.warp.width);
    for (const int k : o.topics) {
      const auto key = static_cast<std::uint64_t>(k);
      const auto state = lda::initialize(corpus, k, hash_keys({o.seed, key}), lda::GibbsOptions{});
      const HashedUniforms uniforms(hash_keys({o.seed, key, 1}));
      for (const Kernel kernel : o.kernels) {
        const auto run = draw_z_in(o.precision, kernel, state.params.theta, state.params.phi, corpus.docs, uniforms, o.kernel);
        std::ostringstream rows;
        bench::TraceReport::from(std::string(to_string(kernel)), o.kernel.warp.width, run.trace).write_csv(rows, false);
        std::istringstream lines(rows.str());
        for (std::string line; std::getline(lines, line);) f << k << ',' << line << '\n';
      }
    }
  }
  out << std::left << std::setw(11) << "kernel" << std::right << std::setw(5) << "K" << std::setw(12) << "global_txn"
      << std::setw(12) << "local_txn" << std::setw(16) << "scattered_local" << std::setw(11) << "shuffles"
      << std::setw(11) << "adds" << std::setw(10) << "draws" << std::setw(11) << "wall_ms" << '\n';
  for (const auto& r : sweep.rows)
    out << std::left << std::setw(11) << to_string(r.kernel) << std::right << std::setw(5) << r.topics << std::setw(12)
        << r.global_txn << std::setw(12) << r.local_txn << std::setw(16) << r.scattered_local << std::setw(11)
        << r.shuffles << std::setw(11) << r.adds << std::setw(10) << r.draws << std::setw(11) << std::fixed
        << std::setprecision(1) << r.wall_ms << std::defaultfloat << '\n';
  out << "wrote " << a.out << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Butterfly-patterned partial sums: verification, sampling, LDA and trace sweeps", "bfly"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bfly 1.0");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "check the butterfly table and search against their oracles");
  add_width(v, verify.common);
  add_seed(v, verify.common);
  add_precision(v, verify.common);
  v->add_option("--k", verify.topics, "number of topics K")->check(CLI::PositiveNumber)->capture_default_str();
  v->add_option("--trials", verify.trials, "random product matrices")->check(CLI::PositiveNumber);
  v->add_option("--instances", verify.instances, "search instances per regime")->check(CLI::PositiveNumber);
  v->add_option("--out", verify.csv, "write the per-check CSV here");

  SampleArgs sample;
  auto* s = app.add_subcommand("sample", "draw from a weights file and test the frequencies");
  s->add_option("--weights", sample.weights, "one non-negative weight per line")->required();
  s->add_option("--n", sample.n, "number of draws")->capture_default_str();
  s->add_option("--method", sample.method, "binary, alias or butterfly")
      ->check(CLI::IsMember({"binary", "alias", "butterfly"}))
      ->capture_default_str();
  s->add_option("--out", sample.out, "write the draws here, one per line");
  add_seed(s, sample.common);
  add_width(s, sample.common);

  LdaArgs lda_args;
  auto* l = app.add_subcommand("lda", "run the Gibbs sampler on a corpus");
  l->add_option("--corpus", lda_args.corpus, "corpus file")->required();
  l->add_option("--vocab", lda_args.vocab, "vocabulary size when the corpus has no header");
  l->add_option("--topics", lda_args.topics, "number of topics K")->check(CLI::PositiveNumber)->capture_default_str();
  l->add_option("--iters", lda_args.iters, "Gibbs iterations")->check(CLI::PositiveNumber)->capture_default_str();
  l->add_option("--kernel", lda_args.kernel, "basic, transposed or butterfly")
      ->check(CLI::IsMember({"basic", "transposed", "butterfly"}))
      ->capture_default_str();
  l->add_option("--stop-inject", lda_args.stop_inject, "file of u values in [0,1), one per token in (doc, position) order");
  l->add_flag("--shared-stops", lda_args.shared_stops, "per-iteration injected u values derived from the seed");
  l->add_option("--alpha", lda_args.alpha, "document-topic prior")->capture_default_str();
  l->add_option("--beta", lda_args.beta, "topic-word prior")->capture_default_str();
  l->add_option("--out", lda_args.out, "output directory")->capture_default_str();
  add_width(l, lda_args.common);
  add_seed(l, lda_args.common);
  add_precision(l, lda_args.common);
  add_threads(l, lda_args.common);

  CorpusArgs corpus;
  auto* c = app.add_subcommand("corpus", "write a synthetic corpus with planted topics");
  c->add_option("--topics", corpus.topics, "planted topics")->capture_default_str();
  c->add_option("--vocab", corpus.vocab, "vocabulary size")->capture_default_str();
  c->add_option("--docs", corpus.docs, "documents")->capture_default_str();
  c->add_option("--len", corpus.len, "tokens per document")->capture_default_str();
  c->add_option("--noise", corpus.noise, "probability of an off-topic token")->capture_default_str();
  c->add_option("--seed", corpus.seed, "random seed")->capture_default_str();
  c->add_option("--out", corpus.out, "corpus file (stdout when omitted)");
  c->add_option("--labels", corpus.labels, "write planted topics as doc,topic CSV");

  TraceArgs trace;
  auto* t = app.add_subcommand("trace", "sweep K and report memory transactions and op counts");
  t->add_option("--corpus", trace.corpus, "corpus file (a planted K=4 corpus when omitted)");
  t->add_option("--k", trace.topics, "topic counts")->delimiter(',')->capture_default_str();
  t->add_option("--kernel", trace.kernels, "kernels to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"basic", "transposed", "butterfly"}))
      ->capture_default_str();
  t->add_option("--out", trace.out, "sweep CSV")->capture_default_str();
  t->add_option("--report", trace.report, "per-array CSV");
  t->add_flag("--timing", trace.timing, "record wall_ms in the CSV (otherwise 0 for reproducible files)");
  add_width(t, trace.common);
  add_seed(t, trace.common);
  add_precision(t, trace.common);
  add_threads(t, trace.common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (v->parsed()) return cmd_verify(verify, out);
    if (s->parsed()) return cmd_sample(sample, out);
    if (l->parsed()) return cmd_lda(lda_args, out);
    if (c->parsed()) return cmd_corpus(corpus, out);
    if (t->parsed()) return cmd_trace(trace, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace bfly::cli
