#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bfly/kernels.hpp"
#include "bfly/matrix.hpp"
#include "bfly/random.hpp"

// Desk-scale uncollapsed LDA Gibbs sampler driving the three z kernels.
namespace bfly::lda {

struct Corpus {
  int vocab = 0;
  Documents docs;
  std::size_t padding = 0;  // empty documents appended at the end

  std::size_t size() const noexcept { return docs.size(); }
  std::size_t real_docs() const noexcept { return docs.size() - padding; }
  std::size_t tokens() const noexcept;
};

/// One document per line, whitespace-separated word ids, optional first line
/// "#M V". Without a header, `vocab` (or max id + 1) sets V.
/// Throws ParseError (with line number) and WordIdOutOfRange.
Corpus parse_corpus(std::istream& in, std::optional<int> vocab = std::nullopt, const std::string& source = "corpus");
Corpus load_corpus(const std::filesystem::path& path, std::optional<int> vocab = std::nullopt);
void write_corpus(std::ostream& out, const Corpus& corpus);

/// Appends empty documents until the count is a multiple of `width`.
void pad_to_multiple(Corpus& corpus, int width);

struct PlantedCorpus {
  Corpus corpus;
  std::vector<int> doc_topic;  // planted topic per document
};

/// Topic t owns the vocabulary slice [t*V/K, (t+1)*V/K). Each document picks a
/// topic; each token comes from its slice, or with probability `noise` from
/// another topic's slice.
PlantedCorpus generate_planted_corpus(int topics, int vocab, int docs, int doc_len, std::uint64_t seed,
                                      double noise = 0.05);

struct ModelParams {
  Matrix<double> theta;  // M x K, rows are topic weights per document
  Matrix<double> phi;    // V x K, columns are word weights per topic
};

struct GibbsOptions {
  double alpha = 0.1;
  double beta = 0.01;
  Kernel kernel = Kernel::butterfly;
  Precision precision = Precision::double_precision;
  KernelOptions kernel_options{};
};

struct GibbsState {
  ModelParams params;
  ZMatrix z;
};

/// Uniform random z, then theta/phi drawn from their posteriors given z.
GibbsState initialize(const Corpus& corpus, int topics, std::uint64_t seed, const GibbsOptions& options);

/// theta[m,.] ~ Dir(alpha + topic counts of m); phi[.,k] ~ Dir(beta + word
/// counts of topic k). Each row/column uses its own derived stream so that
/// padding documents never perturb the others.
void resample_params(const Corpus& corpus, const ZMatrix& z, ModelParams& params, double alpha, double beta,
                     std::uint64_t seed);

/// Draws z with the configured kernel, then resamples the parameters.
KernelRun gibbs_iterate(const Corpus& corpus, GibbsState& state, const GibbsOptions& options,
                        const UniformSource& uniforms, std::uint64_t update_seed);

/// Sum over tokens of log(sum_k thetahat[m,k] * phihat[w,k]) with theta rows
/// and phi columns normalized. Throws AllZero for a zero row or column.
double log_likelihood(const Corpus& corpus, const ModelParams& params);

/// Most frequent topic per document (lowest id on ties, -1 when empty).
std::vector<int> modal_topics(const ZMatrix& z, int topics);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

enum class StopMode : std::uint8_t {
  hashed,            // counter-based u per (doc, step), fresh each iteration
  injected_seeded,   // per-iteration injected table generated from the seed
  injected_fixed,    // caller-supplied table reused every iteration
};

struct RunOptions {
  int topics = 1;
  int iterations = 100;
  std::uint64_t seed = 0;
  GibbsOptions gibbs{};
  StopMode stops = StopMode::hashed;
  std::optional<std::vector<double>> injected;  // for injected_fixed, real-token order
};

struct RunResult {
  GibbsState state;
  std::vector<double> log_likelihood;  // one entry per iteration
};

/// Pads the corpus to the warp width and runs the chain.
RunResult run(Corpus corpus, const RunOptions& options);

/// "doc,pos,topic" rows for the real documents.
void write_z_csv(std::ostream& out, const ZMatrix& z, std::size_t real_docs);
void write_matrix_csv(std::ostream& out, const Matrix<double>& m);

}  // namespace bfly::lda
