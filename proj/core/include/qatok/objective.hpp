#pragma once

#include "qatok/corpus.hpp"
#include "qatok/merge.hpp"
#include "qatok/vocabulary.hpp"

#include <span>
#include <vector>

namespace qatok {

struct ObjectiveWeights {
  double lm = 1.0;
  double comp = 0.0;
  double qual = 1.0;
  double alpha = 1.0;  // exponent of g(x) = (x + eps_q)^alpha
  double eps_q = 1e-8;
};

struct ObjectiveTerms {
  double log_likelihood = 0.0;  // sum over token occurrences of log(f_t / N)
  double complexity = 0.0;      // |V| log|V| + sum_t |t| H(t)
  double quality = 0.0;         // mean of g(q_t) over token occurrences
  double value = 0.0;
};

/// Empirical entropy (natural log) of the atomic symbols making up a token.
double token_entropy(std::span<const SymbolId> atoms);

/// Replays the vocabulary's merges over the corpus. Merges with no
/// occurrences still reserve their id, carrying the stored q_t.
SegmentedCorpus replay(const Vocabulary& vocab, std::span<const AtomicSequence> corpus);

ObjectiveTerms objective_terms(const Vocabulary& vocab, const SegmentedCorpus& segmented,
                               const ObjectiveWeights& w);

/// J = lm * L_LM - comp * Phi(V) + qual * Q(V, Z). Throws when the corpus
/// holds symbols outside the vocabulary's base alphabet.
double evaluate_objective(const Vocabulary& vocab, std::span<const AtomicSequence> corpus,
                          const ObjectiveWeights& w);

struct ExhaustiveResult {
  double best_value = 0.0;
  std::vector<TokenPair> best_sequence;
  std::size_t nodes = 0;
};

inline constexpr std::size_t kExhaustiveNodeLimit = 1'000'000;

/// Enumerates every ordered merge sequence of length <= k over pairs live at
/// each step and returns the best objective. Refuses (throws Error) when an
/// upper bound on the search size, or the search itself, exceeds
/// kExhaustiveNodeLimit nodes.
ExhaustiveResult exhaustive_optimum(std::span<const AtomicSequence> corpus, std::size_t alphabet_size,
                                    Domain domain, const ObjectiveWeights& w, std::size_t k);

}  // namespace qatok
