#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tqa/dataset_types.hpp"
#include "tqa/error.hpp"

namespace tqa {

/// Lowercases, splits on whitespace and breaks punctuation characters into
/// standalone tokens ("U.S." -> "u", ".", "s", ".").
std::vector<std::string> tokenize(const std::string& text);

/// Order-insensitive multiset equality over normalized entity lists.
int exact_match(const std::vector<std::string>& pred,
                const std::vector<std::string>& ref);

/// Exact match relaxed by 10% relative numeric tolerance: numeric items p, r
/// also match when |p - r| <= 0.10*|r| (r = 0 requires p = 0). Uses an exact
/// maximum bipartite matching over the tolerance relation.
int em_with_error_10(const std::vector<std::string>& pred,
                     const std::vector<std::string>& ref);

/// Longest-common-subsequence F1 between token sequences.
double rouge_l(const std::vector<std::string>& pred_tokens,
               const std::vector<std::string>& ref_tokens);

/// N-gram multiset-overlap F1; n must be 1 or 2.
double rouge_n(int n, const std::vector<std::string>& pred_tokens,
               const std::vector<std::string>& ref_tokens);

/// Corpus-level BLEU-4 with clipped n-gram precisions pooled over the
/// corpus, 1/(2*denominator) smoothing for zero counts and the standard
/// brevity penalty. Returned in [0,1]. Throws LengthMismatch.
double bleu(const std::vector<std::vector<std::string>>& preds,
            const std::vector<std::vector<std::string>>& refs);

/// Exact-unigram METEOR without stemming or synonyms: alignment maximizes
/// matches then minimizes chunks; Fmean = 10PR/(R+9P); fragmentation
/// penalty 0.5*(chunks/m)^3.
double meteor_lite(const std::vector<std::string>& pred_tokens,
                   const std::vector<std::string>& ref_tokens);

/// Minimal chunk count over all maximum-cardinality exact-unigram
/// alignments, with the number of matches written to *matches.
/// Exposed so tests can pin the alignment search directly.
int meteor_alignment(const std::vector<std::string>& pred_tokens,
                     const std::vector<std::string>& ref_tokens,
                     int* matches);

// Canonical metric names used in routing, records and reports.
inline const std::string kMetricEm = "em";
inline const std::string kMetricEm10 = "em_with_error_10";
inline const std::string kMetricRougeL = "rouge_l";
inline const std::string kMetricRouge1 = "rouge_1";
inline const std::string kMetricRouge2 = "rouge_2";
inline const std::string kMetricBleu = "bleu";
inline const std::string kMetricMeteor = "meteor";

/// Metric set applied to a category: EM for fact checking and numerical
/// reasoning; 10%-tolerance EM for DA-C / DA-Tr / DA-St; ROUGE-L for the
/// remaining data-analysis subtypes; the five overlap metrics for free-form.
std::set<std::string> select_metric_for_category(const Category& c);

/// The single metric an instance contributes to task and overall rollups.
std::string primary_metric_for_category(const Category& c);

struct InstanceScore {
  std::map<std::string, double> values;   // metric name -> value in [0,1]
  std::set<std::string> applied_metrics;  // equals the category routing
  std::string primary_metric;

  double primary() const;
};

struct MetricMean {
  int n = 0;
  double mean = 0.0;
};

struct SubtypeAggregate {
  Category category;
  int n = 0;
  std::map<std::string, MetricMean> metrics;  // per applied metric
  double primary_mean = 0.0;
};

struct TaskAggregate {
  Task task = Task::FactChecking;
  int n = 0;
  double primary_mean = 0.0;
};

struct AggregateReport {
  std::vector<SubtypeAggregate> subtypes;  // ordered by subtype code
  std::vector<TaskAggregate> tasks;        // ordered by task
  int n_total = 0;
  double overall_mean = 0.0;
  std::map<std::string, int> violation_counts;  // violation code -> count
};

/// Micro-mean aggregation: per-subtype arithmetic means, instance-weighted
/// task rollups and an overall mean of each instance's primary metric.
/// Throws EmptyScores.
AggregateReport aggregate(
    const std::vector<std::pair<Category, InstanceScore>>& scores);

}  // namespace tqa
