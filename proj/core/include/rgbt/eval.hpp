#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgbt/attributes.hpp"
#include "rgbt/dataset.hpp"
#include "rgbt/metrics.hpp"
#include "rgbt/tracking.hpp"

namespace rgbt {

struct EvalConfig {
  double tau = kDefaultPrecisionThreshold;
};

/// Per-sequence metric results, keeping the per-frame scores around for
/// pooled attribute analysis.
struct SequenceEval {
  std::string name;
  Subset subset = Subset::kShortTerm;
  int valid_count = 0;
  double msr = 0.0;
  double mpr = 0.0;
  SuccessCurve success;
  PrecisionCurve precision;
  std::optional<double> jaccard_index;
  std::optional<double> f_measure;
  bool aborted = false;

  // Aligned triples over the valid annotated frames.
  std::vector<double> frame_overlaps;
  std::vector<double> frame_errors;
  std::vector<AttributeSet> frame_attrs;

  AttributeSet sequence_attrs;
};

SequenceEval evaluate_sequence(const SequenceRecord& record, const OpeResult& result,
                               const EvalConfig& config);

/// Mean of per-sequence scores and curves.
struct AggregateScore {
  double msr = 0.0;
  double mpr = 0.0;
  SuccessCurve success;
  PrecisionCurve precision;
  int sequences = 0;
  int frames = 0;
};

AggregateScore aggregate(std::span<const SequenceEval> evals);

enum class AttributeLevel { kFrame, kSequence };

struct AttributeScore {
  double msr = 0.0;
  double mpr = 0.0;
  int support = 0;  // pooled frames or contributing sequences
};

/// Frame level pools exactly the flagged frames across sequences; sequence
/// level averages the sequences whose effective label carries the flag.
/// Attributes with empty support are omitted.
std::map<Attribute, AttributeScore> attribute_breakdown(std::span<const SequenceEval> evals,
                                                        AttributeLevel level, double tau);

struct EvalReport {
  int schema_version = 1;
  double tau = kDefaultPrecisionThreshold;
  AggregateScore overall;
  std::optional<AggregateScore> short_term;
  std::optional<AggregateScore> long_term;
  std::optional<double> mask_jaccard;
  std::optional<double> mask_f;
  int mask_sequences = 0;
  std::vector<SequenceEval> per_sequence;
  std::map<Attribute, AttributeScore> attrs_frame_level;
  std::map<Attribute, AttributeScore> attrs_sequence_level;
  std::vector<std::string> warnings;
};

/// Scores every record against its result (missing results enter as empty
/// boxes and a warning).
EvalReport build_report(std::span<const SequenceRecord> records,
                        std::span<const OpeResult> results, const EvalConfig& config);

/// Deterministic JSON rendering (keys sorted, shortest-round-trip numbers).
std::string report_to_json(const EvalReport& report);

std::string success_curve_csv(const SuccessCurve& curve);
std::string precision_curve_csv(const PrecisionCurve& curve);

}  // namespace rgbt
