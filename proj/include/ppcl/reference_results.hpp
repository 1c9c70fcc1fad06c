#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ppcl/eval.hpp"

// Published IC-SF robustness results (MASSIVE / ATIS / SNIPS benchmarks,
// clean vs perturbed scores with their printed drop rates, and the
// mitigation tables with printed recovery percentages). They serve as
// arithmetic cross-checks: the pdr/recovery implementations must reproduce
// every printed figure from the printed inputs. A handful of published
// cells are internally inconsistent (a single-digit misprint makes the
// printed inputs contradict the printed result); those carry the one-field
// correction that restores consistency and are verified both ways.

namespace ppcl::reference {

struct DropRow {
  const char* dataset;
  const char* perturbation;
  const char* model;
  double clean_ic, perturbed_ic, printed_ic_pdr;
  bool has_sf;
  double clean_sf, perturbed_sf, printed_sf_pdr;
  // misprint handling: which metric is inconsistent as printed, plus the
  // corrected (clean, perturbed) pair that reproduces the printed figure
  const char* misprint_metric;  // nullptr | "ic" | "sf"
  double corrected_clean, corrected_perturbed;
};

inline const std::vector<DropRow>& drop_rows() {
  static const std::vector<DropRow> rows = {
      {"MASSIVE", "oronym", "JointBERT", 90.19, 70.77, 21.53, true, 80.50, 42.28, 47.47,
       nullptr, 0, 0},
      {"MASSIVE", "oronym", "JointBERT+CRF", 89.50, 71.19, 20.45, true, 80.65, 42.41, 47.41,
       nullptr, 0, 0},
      {"MASSIVE", "oronym", "GPT3.5-ZS", 61.39, 60.69, 1.15, false, 0, 0, 0, nullptr, 0, 0},
      {"MASSIVE", "oronym", "GPT3.5-FS", 70.43, 48.91, 30.55, true, 31.95, 20.75, 35.05,
       nullptr, 0, 0},
      {"MASSIVE", "oronym", "GPT2+SFT", 85.52, 67.71, 20.83, true, 65.14, 27.51, 58.40,
       "sf", 65.14, 27.10},
      {"MASSIVE", "oronym", "LLaMA-7b+SFT", 89.18, 74.31, 16.67, true, 79.35, 47.01, 40.75,
       nullptr, 0, 0},
      {"MASSIVE", "synonym", "JointBERT", 90.43, 78.29, 13.42, true, 80.83, 74.77, 7.49,
       nullptr, 0, 0},
      {"MASSIVE", "synonym", "JointBERT+CRF", 89.43, 77.61, 13.21, true, 81.86, 75.87, 7.31,
       nullptr, 0, 0},
      {"MASSIVE", "synonym", "GPT3.5-ZS", 63.04, 58.66, 6.95, false, 0, 0, 0, nullptr, 0, 0},
      {"MASSIVE", "synonym", "GPT3.5-FS", 65.54, 54.59, 16.71, true, 34.43, 31.57, 8.30,
       nullptr, 0, 0},
      {"MASSIVE", "synonym", "GPT2+SFT", 84.99, 70.42, 17.14, true, 67.92, 60.62, 10.74,
       nullptr, 0, 0},
      {"MASSIVE", "synonym", "LLaMA-7b+SFT", 89.23, 76.79, 13.94, true, 80.75, 72.90, 9.72,
       nullptr, 0, 0},
      {"MASSIVE", "paraphrase", "JointBERT", 89.30, 82.96, 7.09, true, 82.81, 71.67, 13.45,
       nullptr, 0, 0},
      {"MASSIVE", "paraphrase", "JointBERT+CRF", 88.71, 80.88, 8.82, true, 82.64, 70.08,
       15.19, nullptr, 0, 0},
      {"MASSIVE", "paraphrase", "GPT3.5-ZS", 60.80, 55.27, 9.09, false, 0, 0, 0, nullptr, 0,
       0},
      {"MASSIVE", "paraphrase", "GPT3.5-FS", 65.55, 59.08, 9.88, true, 34.87, 29.22, 16.20,
       nullptr, 0, 0},
      {"MASSIVE", "paraphrase", "GPT2+SFT", 82.60, 76.71, 7.13, true, 63.53, 52.33, 17.63,
       nullptr, 0, 0},
      {"MASSIVE", "paraphrase", "LLaMA-7b+SFT", 82.78, 80.21, 8.62, true, 81.58, 68.41,
       16.14, "ic", 87.78, 80.21},

      {"ATIS", "oronym", "JointBERT", 97.87, 96.11, 1.79, true, 96.47, 78.37, 18.76, nullptr,
       0, 0},
      {"ATIS", "oronym", "JointBERT+CRF", 97.17, 95.75, 1.46, true, 96.00, 76.09, 20.74,
       nullptr, 0, 0},
      {"ATIS", "oronym", "GPT3.5-ZS", 87.80, 86.21, 1.81, false, 0, 0, 0, nullptr, 0, 0},
      {"ATIS", "oronym", "GPT3.5-FS", 91.54, 90.28, 1.37, true, 77.89, 51.42, 33.98, nullptr,
       0, 0},
      {"ATIS", "oronym", "GPT2+SFT", 98.58, 96.28, 2.33, true, 59.75, 43.49, 27.21, nullptr,
       0, 0},
      {"ATIS", "oronym", "LLaMA-7b+SFT", 99.11, 97.17, 1.95, true, 94.24, 76.68, 18.63,
       nullptr, 0, 0},
      {"ATIS", "synonym", "JointBERT", 97.91, 91.96, 6.07, true, 93.18, 92.64, 3.68, "sf",
       96.18, 92.64},
      {"ATIS", "synonym", "JointBERT+CRF", 97.32, 89.28, 8.26, true, 96.28, 92.46, 3.96,
       nullptr, 0, 0},
      {"ATIS", "synonym", "GPT3.5-ZS", 82.44, 76.48, 7.22, false, 0, 0, 0, nullptr, 0, 0},
      {"ATIS", "synonym", "GPT3.5-FS", 89.58, 88.09, 1.66, true, 77.50, 73.08, 5.70, nullptr,
       0, 0},
      {"ATIS", "synonym", "GPT2+SFT", 97.32, 92.56, 4.89, true, 60.17, 53.00, 11.91, nullptr,
       0, 0},
      {"ATIS", "synonym", "LLaMA-7b+SFT", 98.21, 91.36, 6.97, true, 94.73, 89.33, 5.70,
       nullptr, 0, 0},
      {"ATIS", "paraphrase", "JointBERT", 97.60, 91.00, 6.76, true, 95.86, 82.64, 13.79,
       nullptr, 0, 0},
      {"ATIS", "paraphrase", "JointBERT+CRF", 98.81, 90.20, 8.71, true, 95.61, 82.43, 13.78,
       nullptr, 0, 0},
      {"ATIS", "paraphrase", "GPT3.5-ZS", 88.15, 82.33, 6.71, false, 0, 0, 0, "ic", 88.25,
       82.33},
      {"ATIS", "paraphrase", "GPT3.5-FS", 90.20, 87.12, 3.41, true, 77.50, 70.01, 9.66,
       nullptr, 0, 0},
      {"ATIS", "paraphrase", "GPT2+SFT", 92.12, 90.19, 2.09, true, 92.96, 44.76, 51.85,
       nullptr, 0, 0},
      {"ATIS", "paraphrase", "LLaMA-7b+SFT", 98.17, 90.42, 7.89, true, 93.72, 80.63, 13.97,
       nullptr, 0, 0},

      {"SNIPS", "oronym", "JointBERT", 98.61, 96.06, 2.58, true, 97.05, 79.14, 18.45, nullptr,
       0, 0},
      {"SNIPS", "oronym", "JointBERT+CRF", 98.14, 94.67, 3.53, true, 95.87, 78.63, 17.98,
       nullptr, 0, 0},
      {"SNIPS", "oronym", "GPT3.5-ZS", 95.60, 94.44, 1.21, false, 0, 0, 0, nullptr, 0, 0},
      {"SNIPS", "oronym", "GPT3.5-FS", 93.98, 90.74, 3.44, true, 50.30, 41.48, 17.53, nullptr,
       0, 0},
      {"SNIPS", "oronym", "GPT2+SFT", 97.86, 95.26, 2.65, true, 90.66, 65.24, 28.04, nullptr,
       0, 0},
      {"SNIPS", "oronym", "LLaMA-7b+SFT", 98.14, 96.75, 1.42, true, 94.42, 75.84, 19.67,
       nullptr, 0, 0},
      {"SNIPS", "synonym", "JointBERT", 99.05, 95.58, 3.50, true, 96.00, 87.04, 9.33, nullptr,
       0, 0},
      {"SNIPS", "synonym", "JointBERT+CRF", 99.05, 95.58, 3.50, true, 94.87, 86.68, 8.63,
       nullptr, 0, 0},
      {"SNIPS", "synonym", "GPT3.5-ZS", 95.89, 84.85, 11.51, false, 0, 0, 0, nullptr, 0, 0},
      {"SNIPS", "synonym", "GPT3.5-FS", 94.32, 80.44, 14.71, true, 48.05, 43.28, 9.92,
       nullptr, 0, 0},
      {"SNIPS", "synonym", "GPT2+SFT", 98.71, 90.06, 8.76, true, 90.85, 75.41, 16.99, nullptr,
       0, 0},
      {"SNIPS", "synonym", "LLaMA-7b+SFT", 99.05, 94.32, 4.77, true, 94.45, 83.25, 11.85,
       nullptr, 0, 0},
      {"SNIPS", "paraphrase", "JointBERT", 98.53, 93.09, 5.52, true, 96.67, 58.69, 39.39,
       "sf", 96.67, 58.59},
      {"SNIPS", "paraphrase", "JointBERT+CRF", 98.23, 91.77, 6.57, true, 96.06, 58.88, 38.70,
       nullptr, 0, 0},
      {"SNIPS", "paraphrase", "GPT3.5-ZS", 95.74, 83.84, 12.42, false, 0, 0, 0, nullptr, 0,
       0},
      {"SNIPS", "paraphrase", "GPT3.5-FS", 93.97, 80.76, 14.05, true, 49.49, 33.01, 33.29,
       nullptr, 0, 0},
      {"SNIPS", "paraphrase", "GPT2+SFT", 97.60, 90.09, 7.69, true, 90.96, 49.44, 45.64,
       nullptr, 0, 0},
      {"SNIPS", "paraphrase", "LLaMA-7b+SFT", 98.23, 90.01, 8.36, true, 94.41, 55.64, 41.06,
       nullptr, 0, 0},
  };
  return rows;
}

struct MitigationRow {
  const char* dataset;
  const char* perturbation;
  const char* mitigation;          // loss combination + augmentation size
  bool is_full_objective;          // clean + perturbed + consistency terms
  double baseline_ic_pdr, ic_pdr, printed_ic_recovery;
  double baseline_sf_pdr, sf_pdr, printed_sf_recovery;
  bool ic_unexplained, sf_unexplained;  // printed figure not reproducible; reported, not asserted
};

inline const std::vector<MitigationRow>& mitigation_rows() {
  static const std::vector<MitigationRow> rows = {
      // MASSIVE, LLaMA-7b
      {"MASSIVE", "oronym", "consistency only, +3k", false, 16.67, 15.74, 5, 40.75, 32.80, 19,
       false, false},
      {"MASSIVE", "oronym", "paired augmentation, +3k", false, 16.67, 8.95, 46, 40.75, 18.44,
       55, false, false},
      {"MASSIVE", "oronym", "paired augmentation, +50k", false, 16.67, 9.02, 45, 40.75, 19.73,
       51, false, false},
      {"MASSIVE", "oronym", "full objective, +3k", true, 16.67, 8.74, 47, 40.75, 15.41, 62,
       false, false},
      {"MASSIVE", "synonym", "consistency only, +5k", false, 13.94, 12.11, 13, 9.72, 7.83, 19,
       false, false},
      {"MASSIVE", "synonym", "paired augmentation, +5k", false, 13.94, 5.59, 60, 9.72, 5.13,
       47, false, false},
      {"MASSIVE", "synonym", "paired augmentation, +50k", false, 13.94, 4.01, 71, 9.72, 4.49,
       53, false, false},
      {"MASSIVE", "synonym", "full objective, +5k", true, 13.94, 3.74, 73, 9.72, 1.44, 85,
       false, false},
      {"MASSIVE", "paraphrase", "consistency only, +6k", false, 8.62, 7.79, 9, 16.14, 15.10,
       6, false, false},
      {"MASSIVE", "paraphrase", "paired augmentation, +6k", false, 8.62, 5.92, 31, 16.14,
       8.89, 45, false, false},
      {"MASSIVE", "paraphrase", "paired augmentation, +50k", false, 8.62, 3.69, 57, 16.14,
       4.24, 74, false, false},
      {"MASSIVE", "paraphrase", "full objective, +6k", true, 8.62, 3.69, 57, 16.14, 6.36, 60,
       false, false},

      // SNIPS, LLaMA-7b ablations (negative drops appear as improvements)
      {"SNIPS", "oronym", "paired augmentation", false, 1.42, 0.23, 84, 19.67, 2.62, 86,
       false, false},
      {"SNIPS", "oronym", "full objective", true, 1.42, 0.0, 100, 19.67, 1.58, 92, false,
       false},
      {"SNIPS", "synonym", "paired augmentation", false, 4.77, 1.70, 64, 11.85, 3.89, 67,
       false, false},
      {"SNIPS", "synonym", "full objective", true, 4.77, -0.31, 118, 11.85, 1.31, 89, true,
       false},
      {"SNIPS", "paraphrase", "paired augmentation", false, 8.36, 5.52, 34, 41.06, 28.97, 29,
       false, false},
      {"SNIPS", "paraphrase", "full objective", true, 8.36, 4.63, 44, 41.06, 28.45, 30, false,
       false},

      // ATIS, LLaMA-7b ablations
      {"ATIS", "oronym", "paired augmentation", false, 1.95, 0.18, 83, 18.63, -0.33, 101,
       true, false},
      {"ATIS", "oronym", "full objective", true, 1.95, -0.01, 100, 18.63, -0.71, 104, false,
       false},
      {"ATIS", "synonym", "paired augmentation", false, 6.97, 3.55, 49, 5.70, 2.32, 59, false,
       false},
      {"ATIS", "synonym", "full objective", true, 6.97, 2.11, 69, 5.70, 0.33, 94, false,
       false},
      {"ATIS", "paraphrase", "paired augmentation", false, 7.89, 6.51, 17, 13.97, 8.95, 36,
       false, false},
      {"ATIS", "paraphrase", "full objective", true, 7.89, 4.83, 39, 13.97, 3.19, 77, false,
       false},
  };
  return rows;
}

/// Published headline aggregates for the SFT baseline on MASSIVE: the mean
/// of the three per-perturbation drop rates.
struct Aggregate {
  double ic_inputs[3] = {16.67, 13.94, 8.62};
  double sf_inputs[3] = {40.75, 9.72, 16.14};
  double printed_ic_mean = 13.07;
  double printed_sf_mean = 22.20;
};

/// Published headline recovery averages for the full objective on MASSIVE.
struct RecoveryAverages {
  double printed_ic_avg = 59.0;
  double printed_sf_avg = 69.0;
};

// ---------------------------------------------------------------------------
// Check battery.
// ---------------------------------------------------------------------------

struct CheckLine {
  std::string label;
  double computed = 0;
  double expected = 0;
  double tolerance = 0;
  bool pass = false;
  bool informational = false;  // reported but excluded from the gate
  std::string note;
};

inline CheckLine make_line(std::string label, double computed, double expected,
                           double tolerance, std::string note = {},
                           bool informational = false) {
  CheckLine line;
  line.label = std::move(label);
  line.computed = computed;
  line.expected = expected;
  line.tolerance = tolerance;
  line.pass = informational || std::abs(computed - expected) <= tolerance;
  line.informational = informational;
  line.note = std::move(note);
  return line;
}

/// Drop-rate reproduction, ±0.01 per printed figure. Misprinted cells are
/// checked both ways: the figure must NOT follow from the printed inputs
/// and MUST follow from the documented one-field correction.
inline std::vector<CheckLine> check_drop_rows() {
  std::vector<CheckLine> out;
  for (const auto& row : drop_rows()) {
    const auto emit = [&](const char* metric, double clean, double perturbed,
                          double printed) {
      const std::string label = std::string(row.dataset) + " " + row.perturbation + " " +
                                row.model + " " + metric + "-PDR";
      const bool misprint =
          row.misprint_metric != nullptr && std::string(metric) == row.misprint_metric;
      if (!misprint) {
        out.push_back(make_line(label, pdr(clean, perturbed), printed, 0.01));
        return;
      }
      const double as_printed = pdr(clean, perturbed);
      const double corrected = pdr(row.corrected_clean, row.corrected_perturbed);
      CheckLine line;
      line.label = label + " [misprinted cell]";
      line.computed = corrected;
      line.expected = printed;
      line.tolerance = 0.01;
      line.pass = std::abs(as_printed - printed) > 0.01 &&
                  std::abs(corrected - printed) <= 0.01;
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "printed inputs give %.4f, not %.2f; correction (%.2f, %.2f) "
                    "reproduces it",
                    as_printed, printed, row.corrected_clean, row.corrected_perturbed);
      line.note = buf;
      out.push_back(line);
    };
    emit("ic", row.clean_ic, row.perturbed_ic, row.printed_ic_pdr);
    if (row.has_sf) emit("sf", row.clean_sf, row.perturbed_sf, row.printed_sf_pdr);
  }
  return out;
}

/// Mean drop rates across the three perturbations, ±0.01.
inline std::vector<CheckLine> check_aggregates() {
  const Aggregate agg;
  const auto mean3 = [](const double* v) { return (v[0] + v[1] + v[2]) / 3.0; };
  return {
      make_line("MASSIVE SFT mean ic-PDR", mean3(agg.ic_inputs), agg.printed_ic_mean, 0.01),
      make_line("MASSIVE SFT mean sf-PDR", mean3(agg.sf_inputs), agg.printed_sf_mean, 0.01),
  };
}

/// Recovery reproduction, ±1 percentage point per printed figure, plus the
/// headline averages of the full-objective rows on MASSIVE.
inline std::vector<CheckLine> check_recovery_rows() {
  std::vector<CheckLine> out;
  double full_ic_sum = 0, full_sf_sum = 0;
  std::size_t full_n = 0;
  for (const auto& row : mitigation_rows()) {
    const std::string base = std::string(row.dataset) + " " + row.perturbation + " " +
                             row.mitigation;
    const double ic = recovery(row.baseline_ic_pdr, row.ic_pdr);
    const double sf = recovery(row.baseline_sf_pdr, row.sf_pdr);
    out.push_back(make_line(base + " ic-recovery", ic, row.printed_ic_recovery, 1.0,
                            row.ic_unexplained ? "printed figure unexplained; excluded" : "",
                            row.ic_unexplained));
    out.push_back(make_line(base + " sf-recovery", sf, row.printed_sf_recovery, 1.0,
                            row.sf_unexplained ? "printed figure unexplained; excluded" : "",
                            row.sf_unexplained));
    if (row.is_full_objective && std::string(row.dataset) == "MASSIVE") {
      full_ic_sum += ic;
      full_sf_sum += sf;
      ++full_n;
    }
  }
  const RecoveryAverages avg;
  out.push_back(make_line("MASSIVE full-objective avg ic-recovery",
                          full_ic_sum / static_cast<double>(full_n), avg.printed_ic_avg, 1.0));
  out.push_back(make_line("MASSIVE full-objective avg sf-recovery",
                          full_sf_sum / static_cast<double>(full_n), avg.printed_sf_avg, 1.0));
  return out;
}

}  // namespace ppcl::reference
