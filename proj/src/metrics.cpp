#include "tqa/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>

namespace tqa {

namespace {

bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  std::size_t b = (s[0] == '+') ? 1 : 0;
  const char* first = s.data() + b;
  const char* last = s.data() + s.size();
  if (first == last) return false;
  double v = 0.0;
  auto res = std::from_chars(first, last, v, std::chars_format::general);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    return false;
  *out = v;
  return true;
}

bool items_match_with_tolerance(const std::string& p, const std::string& r) {
  if (p == r) return true;
  double pv = 0.0, rv = 0.0;
  if (!parse_number(p, &pv) || !parse_number(r, &rv)) return false;
  if (rv == 0.0) return pv == 0.0;
  return std::abs(pv - rv) <= 0.10 * std::abs(rv);
}

// Kuhn's augmenting-path matching; the lists are tiny so exactness is cheap.
bool try_augment(int u, const std::vector<std::vector<int>>& adj,
                 std::vector<int>* match_r, std::vector<bool>* visited) {
  for (int v : adj[u]) {
    if ((*visited)[v]) continue;
    (*visited)[v] = true;
    if ((*match_r)[v] < 0 ||
        try_augment((*match_r)[v], adj, match_r, visited)) {
      (*match_r)[v] = u;
      return true;
    }
  }
  return false;
}

bool perfect_tolerance_matching(const std::vector<std::string>& pred,
                                const std::vector<std::string>& ref) {
  if (pred.size() != ref.size()) return false;
  if (pred.empty()) return true;
  std::vector<std::vector<int>> adj(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (items_match_with_tolerance(pred[i], ref[j]))
        adj[i].push_back(static_cast<int>(j));
  std::vector<int> match_r(ref.size(), -1);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::vector<bool> visited(ref.size(), false);
    if (!try_augment(static_cast<int>(i), adj, &match_r, &visited))
      return false;
  }
  return true;
}

int lcs_length(const std::vector<std::string>& a,
               const std::vector<std::string>& b) {
  std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double f1(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::map<std::vector<std::string>, int> ngram_counts(
    const std::vector<std::string>& tokens, int n) {
  std::map<std::vector<std::string>, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i,
                                      tokens.begin() + i + n)];
  return counts;
}

// Branch-and-bound search for the minimum chunk count over all
// maximum-cardinality alignments. `budget` caps the number of visited
// nodes; when exhausted the best value found so far is kept (the greedy
// first descent is already a valid alignment).
struct ChunkSearch {
  const std::vector<std::string>& pred;
  const std::vector<std::string>& ref;
  std::unordered_map<std::string, int> quota;  // matches still to place per token
  std::vector<bool> ref_used;
  std::vector<int> remaining_after;  // same-token pred occurrences after pos
  long long budget = 2'000'000;
  int best = 0;

  ChunkSearch(const std::vector<std::string>& p,
              const std::vector<std::string>& r)
      : pred(p), ref(r), ref_used(r.size(), false) {}

  // prev_ref: ref index matched at pos-1, or -2 when pos-1 was unmatched.
  void run(std::size_t pos, int chunks, int prev_ref) {
    if (budget-- <= 0) return;
    if (chunks >= best) return;  // cannot improve
    if (pos == pred.size()) {
      for (const auto& [token, q] : quota)
        if (q > 0) return;  // not a maximum matching
      best = chunks;
      return;
    }
    const std::string& token = pred[pos];
    auto quota_it = quota.find(token);
    int q = quota_it == quota.end() ? 0 : quota_it->second;
    if (q > 0) {
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j] || ref[j] != token) continue;
        bool contiguous = prev_ref >= 0 && static_cast<int>(j) == prev_ref + 1;
        ref_used[j] = true;
        --quota_it->second;
        run(pos + 1, chunks + (contiguous ? 0 : 1), static_cast<int>(j));
        ++quota_it->second;
        ref_used[j] = false;
      }
    }
    // Leave this position unmatched if enough later occurrences remain.
    if (q == 0 || remaining_after[pos] >= q) run(pos + 1, chunks, -2);
  }
};

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 128 && std::ispunct(c)) {
      flush();
      tokens.push_back(std::string(1, ch));
    } else {
      cur.push_back(
          static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

int exact_match(const std::vector<std::string>& pred,
                const std::vector<std::string>& ref) {
  if (pred.size() != ref.size()) return 0;
  std::vector<std::string> a = pred, b = ref;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b ? 1 : 0;
}

int em_with_error_10(const std::vector<std::string>& pred,
                     const std::vector<std::string>& ref) {
  if (exact_match(pred, ref)) return 1;
  return perfect_tolerance_matching(pred, ref) ? 1 : 0;
}

double rouge_l(const std::vector<std::string>& pred_tokens,
               const std::vector<std::string>& ref_tokens) {
  if (pred_tokens.empty() || ref_tokens.empty()) return 0.0;
  int lcs = lcs_length(pred_tokens, ref_tokens);
  if (lcs == 0) return 0.0;
  double p = static_cast<double>(lcs) / pred_tokens.size();
  double r = static_cast<double>(lcs) / ref_tokens.size();
  return f1(p, r);
}

double rouge_n(int n, const std::vector<std::string>& pred_tokens,
               const std::vector<std::string>& ref_tokens) {
  if (n != 1 && n != 2)
    throw LengthMismatch("rouge_n supports n in {1,2}, got " +
                         std::to_string(n));
  auto pred_counts = ngram_counts(pred_tokens, n);
  auto ref_counts = ngram_counts(ref_tokens, n);
  if (pred_counts.empty() || ref_counts.empty()) return 0.0;
  long long overlap = 0, pred_total = 0, ref_total = 0;
  for (const auto& [g, c] : pred_counts) {
    pred_total += c;
    auto it = ref_counts.find(g);
    if (it != ref_counts.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : ref_counts) ref_total += c;
  if (overlap == 0) return 0.0;
  double p = static_cast<double>(overlap) / pred_total;
  double r = static_cast<double>(overlap) / ref_total;
  return f1(p, r);
}

double bleu(const std::vector<std::vector<std::string>>& preds,
            const std::vector<std::vector<std::string>>& refs) {
  if (preds.size() != refs.size() || preds.empty())
    throw LengthMismatch("bleu needs equal nonempty candidate/reference lists");
  long long pred_len = 0, ref_len = 0;
  for (const auto& p : preds) pred_len += static_cast<long long>(p.size());
  for (const auto& r : refs) ref_len += static_cast<long long>(r.size());
  if (pred_len == 0) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    long long numer = 0, denom = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      auto pc = ngram_counts(preds[i], n);
      auto rc = ngram_counts(refs[i], n);
      for (const auto& [g, c] : pc) {
        denom += c;
        auto it = rc.find(g);
        if (it != rc.end()) numer += std::min(c, it->second);
      }
    }
    double p;
    if (numer > 0)
      p = static_cast<double>(numer) / static_cast<double>(denom);
    else
      p = 1.0 / (2.0 * static_cast<double>(std::max<long long>(denom, 1)));
    log_sum += std::log(p);
  }
  double geo_mean = std::exp(log_sum / 4.0);
  double bp = 1.0;
  if (pred_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) /
                            static_cast<double>(pred_len));
  double value = bp * geo_mean;
  return std::clamp(value, 0.0, 1.0);
}

int meteor_alignment(const std::vector<std::string>& pred_tokens,
                     const std::vector<std::string>& ref_tokens,
                     int* matches) {
  std::unordered_map<std::string, int> pred_counts, ref_counts;
  for (const auto& t : pred_tokens) ++pred_counts[t];
  for (const auto& t : ref_tokens) ++ref_counts[t];
  int m = 0;
  std::unordered_map<std::string, int> quota;
  for (const auto& [t, c] : pred_counts) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end()) {
      quota[t] = std::min(c, it->second);
      m += quota[t];
    }
  }
  *matches = m;
  if (m == 0) return 0;

  ChunkSearch search(pred_tokens, ref_tokens);
  search.quota = quota;
  search.best = m + 1;  // worst case: every match its own chunk
  // For each pred position, how many occurrences of the same token follow.
  search.remaining_after.assign(pred_tokens.size(), 0);
  std::unordered_map<std::string, int> left;
  for (std::size_t i = pred_tokens.size(); i-- > 0;) {
    search.remaining_after[i] = left[pred_tokens[i]];
    ++left[pred_tokens[i]];
  }
  search.run(0, 0, -2);
  return search.best <= m ? search.best : m;
}

double meteor_lite(const std::vector<std::string>& pred_tokens,
                   const std::vector<std::string>& ref_tokens) {
  if (pred_tokens.empty() || ref_tokens.empty()) return 0.0;
  int m = 0;
  int chunks = meteor_alignment(pred_tokens, ref_tokens, &m);
  if (m == 0) return 0.0;
  double p = static_cast<double>(m) / pred_tokens.size();
  double r = static_cast<double>(m) / ref_tokens.size();
  double fmean = 10.0 * p * r / (r + 9.0 * p);
  double frag = static_cast<double>(chunks) / static_cast<double>(m);
  double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

std::set<std::string> select_metric_for_category(const Category& c) {
  if (c.task == Task::FreeForm)
    return {kMetricBleu, kMetricRouge1, kMetricRouge2, kMetricRougeL,
            kMetricMeteor};
  if (c.task == Task::FactChecking || c.task == Task::NumericalReasoning)
    return {kMetricEm};
  if (c.task == Task::DataAnalysis) {
    if (c.subtype == "DA-C" || c.subtype == "DA-Tr" || c.subtype == "DA-St")
      return {kMetricEm10};
    if (c.subtype == "DA-I" || c.subtype == "DA-Ds" || c.subtype == "DA-An" ||
        c.is_unknown_subtype())
      return {kMetricRougeL};
    throw UnknownCategory("unknown data-analysis subtype \"" + c.subtype +
                          "\"");
  }
  throw UnknownCategory("unknown category");
}

std::string primary_metric_for_category(const Category& c) {
  if (c.task == Task::FreeForm) return kMetricRougeL;
  std::set<std::string> metrics = select_metric_for_category(c);
  return *metrics.begin();
}

double InstanceScore::primary() const {
  auto it = values.find(primary_metric);
  return it == values.end() ? 0.0 : it->second;
}

AggregateReport aggregate(
    const std::vector<std::pair<Category, InstanceScore>>& scores) {
  if (scores.empty()) throw EmptyScores("no instance scores to aggregate");

  struct SubtypeAccum {
    Category category;
    int n = 0;
    std::map<std::string, std::pair<int, double>> metric_sums;
    double primary_sum = 0.0;
  };
  // Keyed by task+subtype: the synthetic UNK code can appear under several
  // tasks and must not merge across them.
  std::map<std::string, SubtypeAccum> by_subtype;
  for (const auto& [cat, score] : scores) {
    SubtypeAccum& acc =
        by_subtype[task_name(cat.task) + "/" + cat.subtype];
    acc.category = cat;
    acc.n += 1;
    acc.primary_sum += score.primary();
    for (const auto& name : score.applied_metrics) {
      auto it = score.values.find(name);
      double v = it == score.values.end() ? 0.0 : it->second;
      auto& [count, sum] = acc.metric_sums[name];
      count += 1;
      sum += v;
    }
  }

  AggregateReport report;
  std::map<Task, std::pair<int, double>> task_sums;
  int n_total = 0;
  double overall_sum = 0.0;
  for (const auto& [subtype, acc] : by_subtype) {
    SubtypeAggregate agg;
    agg.category = acc.category;
    agg.n = acc.n;
    agg.primary_mean = acc.primary_sum / acc.n;
    for (const auto& [name, cs] : acc.metric_sums)
      agg.metrics[name] = MetricMean{cs.first, cs.second / cs.first};
    report.subtypes.push_back(std::move(agg));

    auto& [tn, tsum] = task_sums[acc.category.task];
    tn += acc.n;
    tsum += acc.primary_sum;
    n_total += acc.n;
    overall_sum += acc.primary_sum;
  }
  for (const auto& [task, nsum] : task_sums)
    report.tasks.push_back(
        TaskAggregate{task, nsum.first, nsum.second / nsum.first});
  report.n_total = n_total;
  report.overall_mean = overall_sum / n_total;
  return report;
}

}  // namespace tqa
