#include "rgbt/eval.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rgbt/errors.hpp"

namespace rgbt {

// Insertion order is preserved so the report reads top-down and attribute
// tables stay in the canonical order.
using json = nlohmann::ordered_json;

SequenceEval evaluate_sequence(const SequenceRecord& record, const OpeResult& result,
                               const EvalConfig& config) {
  if (static_cast<int>(result.boxes.size()) != record.frame_count) {
    throw ProtocolError(record.name + ": result has " + std::to_string(result.boxes.size()) +
                        " frames, sequence has " + std::to_string(record.frame_count));
  }

  // Subsample predictions at the annotated frames.
  std::vector<BoundingBox> pred;
  const std::vector<int> annotated = record.annotated_indices();
  pred.reserve(annotated.size());
  for (int f : annotated) pred.push_back(result.boxes[static_cast<std::size_t>(f)]);

  const std::vector<bool> valid = valid_frames(record.gt_visible, record.gt_thermal);

  SequenceEval ev;
  ev.name = record.name;
  ev.subset = record.subset;
  ev.aborted = result.aborted;
  ev.frame_overlaps = frame_max_overlaps(pred, record.gt_visible, record.gt_thermal, valid);
  ev.frame_errors = frame_min_center_errors(pred, record.gt_visible, record.gt_thermal, valid);
  for (std::size_t i = 0; i < annotated.size(); ++i) {
    if (valid[i]) {
      ev.frame_attrs.push_back(i < record.frame_attributes.frames.size()
                                   ? record.frame_attributes.frames[i]
                                   : AttributeSet{});
    }
  }
  ev.valid_count = static_cast<int>(ev.frame_overlaps.size());
  ev.success = success_curve(ev.frame_overlaps);
  ev.precision = precision_curve(ev.frame_errors);
  ev.msr = ev.success.auc();
  ev.mpr = mpr(pred, record.gt_visible, record.gt_thermal, valid, config.tau);
  ev.sequence_attrs = record.effective_sequence_attributes();

  if (!record.masks.empty()) {
    std::vector<FrameMask> pred_masks, gt_masks;
    for (const auto& [frame, gt_mask] : record.masks) {
      pred_masks.push_back(
          rasterize_box(result.boxes[static_cast<std::size_t>(frame)], gt_mask.width,
                        gt_mask.height));
      gt_masks.push_back(gt_mask);
    }
    ev.jaccard_index = jaccard(pred_masks, gt_masks);
    const double tol = default_boundary_tolerance(gt_masks.front().width, gt_masks.front().height);
    ev.f_measure = f_score(pred_masks, gt_masks, tol);
  }
  return ev;
}

AggregateScore aggregate(std::span<const SequenceEval> evals) {
  AggregateScore agg;
  agg.sequences = static_cast<int>(evals.size());
  for (int k = 0; k < kCurveSamples; ++k) {
    agg.success.thresholds[k] = 0.05 * k;
    agg.precision.thresholds[k] = 2.5 * k;
  }
  if (evals.empty()) return agg;
  for (const SequenceEval& e : evals) {
    agg.msr += e.msr;
    agg.mpr += e.mpr;
    agg.frames += e.valid_count;
    for (int k = 0; k < kCurveSamples; ++k) {
      agg.success.rates[k] += e.success.rates[k];
      agg.precision.rates[k] += e.precision.rates[k];
    }
  }
  const double n = static_cast<double>(evals.size());
  agg.msr /= n;
  agg.mpr /= n;
  for (int k = 0; k < kCurveSamples; ++k) {
    agg.success.rates[k] /= n;
    agg.precision.rates[k] /= n;
  }
  return agg;
}

std::map<Attribute, AttributeScore> attribute_breakdown(std::span<const SequenceEval> evals,
                                                        AttributeLevel level, double tau) {
  std::map<Attribute, AttributeScore> out;
  for (Attribute a : all_attributes()) {
    if (level == AttributeLevel::kFrame) {
      std::vector<double> overlaps, errors;
      for (const SequenceEval& e : evals) {
        for (std::size_t i = 0; i < e.frame_attrs.size(); ++i) {
          if (e.frame_attrs[i].test(a)) {
            overlaps.push_back(e.frame_overlaps[i]);
            errors.push_back(e.frame_errors[i]);
          }
        }
      }
      if (overlaps.empty()) continue;  // attribute absent, not zero
      AttributeScore score;
      score.support = static_cast<int>(overlaps.size());
      score.msr = success_curve(overlaps).auc();
      int hits = 0;
      for (double err : errors) hits += err <= tau;
      score.mpr = static_cast<double>(hits) / static_cast<double>(errors.size());
      out[a] = score;
    } else {
      std::vector<SequenceEval> subset;
      for (const SequenceEval& e : evals) {
        if (e.sequence_attrs.test(a)) subset.push_back(e);
      }
      if (subset.empty()) continue;
      const AggregateScore agg = aggregate(subset);
      out[a] = AttributeScore{agg.msr, agg.mpr, agg.sequences};
    }
  }
  return out;
}

EvalReport build_report(std::span<const SequenceRecord> records,
                        std::span<const OpeResult> results, const EvalConfig& config) {
  EvalReport report;
  report.tau = config.tau;

  for (const SequenceRecord& rec : records) {
    const OpeResult* found = nullptr;
    for (const OpeResult& r : results) {
      if (r.sequence == rec.name) {
        found = &r;
        break;
      }
    }
    OpeResult empty;
    if (!found) {
      report.warnings.push_back("missing result for sequence " + rec.name +
                                "; scored as empty boxes");
      empty.sequence = rec.name;
      empty.boxes.assign(static_cast<std::size_t>(rec.frame_count), BoundingBox::empty_box());
      empty.confidences.assign(static_cast<std::size_t>(rec.frame_count), 0.0);
      empty.millis.assign(static_cast<std::size_t>(rec.frame_count), 0.0);
      found = &empty;
    }
    report.per_sequence.push_back(evaluate_sequence(rec, *found, config));
  }

  std::sort(report.per_sequence.begin(), report.per_sequence.end(),
            [](const SequenceEval& a, const SequenceEval& b) { return a.name < b.name; });

  report.overall = aggregate(report.per_sequence);

  std::vector<SequenceEval> st, lt;
  for (const SequenceEval& e : report.per_sequence) {
    (e.subset == Subset::kLongTerm ? lt : st).push_back(e);
  }
  if (!st.empty()) report.short_term = aggregate(st);
  if (!lt.empty()) report.long_term = aggregate(lt);

  double jsum = 0.0, fsum = 0.0;
  int masked = 0;
  for (const SequenceEval& e : report.per_sequence) {
    if (e.jaccard_index) {
      jsum += *e.jaccard_index;
      fsum += *e.f_measure;
      ++masked;
    }
  }
  if (masked > 0) {
    report.mask_jaccard = jsum / masked;
    report.mask_f = fsum / masked;
    report.mask_sequences = masked;
  }

  report.attrs_frame_level =
      attribute_breakdown(report.per_sequence, AttributeLevel::kFrame, config.tau);
  report.attrs_sequence_level =
      attribute_breakdown(report.per_sequence, AttributeLevel::kSequence, config.tau);
  return report;
}

namespace {

json curve_to_json(const SuccessCurve& c) {
  json j;
  j["thresholds"] = c.thresholds;
  j["rates"] = c.rates;
  return j;
}

json curve_to_json(const PrecisionCurve& c) {
  json j;
  j["thresholds"] = c.thresholds;
  j["rates"] = c.rates;
  return j;
}

json aggregate_to_json(const AggregateScore& a) {
  json j;
  j["msr"] = a.msr;
  j["mpr"] = a.mpr;
  j["sequences"] = a.sequences;
  j["frames"] = a.frames;
  j["success_curve"] = curve_to_json(a.success);
  j["precision_curve"] = curve_to_json(a.precision);
  return j;
}

json attrs_to_json(const std::map<Attribute, AttributeScore>& attrs) {
  json j = json::object();
  for (Attribute a : all_attributes()) {
    const auto it = attrs.find(a);
    if (it == attrs.end()) continue;
    json e;
    e["msr"] = it->second.msr;
    e["mpr"] = it->second.mpr;
    e["support"] = it->second.support;
    j[std::string(attribute_name(a))] = e;
  }
  return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json j;
  j["schema_version"] = report.schema_version;
  j["tau"] = report.tau;
  j["overall"] = aggregate_to_json(report.overall);
  if (report.short_term) j["short_term"] = aggregate_to_json(*report.short_term);
  if (report.long_term) j["long_term"] = aggregate_to_json(*report.long_term);
  if (report.mask_jaccard) {
    json m;
    m["jaccard"] = *report.mask_jaccard;
    m["f_score"] = *report.mask_f;
    m["sequences"] = report.mask_sequences;
    j["mask"] = m;
  }
  json seqs = json::array();
  for (const SequenceEval& e : report.per_sequence) {
    json s;
    s["name"] = e.name;
    s["subset"] = std::string(subset_name(e.subset));
    s["msr"] = e.msr;
    s["mpr"] = e.mpr;
    s["valid_frames"] = e.valid_count;
    if (e.jaccard_index) s["jaccard"] = *e.jaccard_index;
    if (e.f_measure) s["f_score"] = *e.f_measure;
    if (e.aborted) s["aborted"] = true;
    seqs.push_back(s);
  }
  j["sequences"] = seqs;
  j["attributes"]["frame_level"] = attrs_to_json(report.attrs_frame_level);
  j["attributes"]["sequence_level"] = attrs_to_json(report.attrs_sequence_level);
  if (!report.warnings.empty()) j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::string success_curve_csv(const SuccessCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "threshold,rate\n";
  for (int k = 0; k < kCurveSamples; ++k) {
    os << curve.thresholds[k] << ',' << curve.rates[k] << '\n';
  }
  return os.str();
}

std::string precision_curve_csv(const PrecisionCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "threshold,rate\n";
  for (int k = 0; k < kCurveSamples; ++k) {
    os << curve.thresholds[k] << ',' << curve.rates[k] << '\n';
  }
  return os.str();
}

}  // namespace rgbt
