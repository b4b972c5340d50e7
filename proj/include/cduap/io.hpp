#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cduap/attack.hpp"
#include "cduap/data.hpp"
#include "cduap/eval.hpp"
#include "cduap/mlp.hpp"

namespace cduap {

// 17 significant digits: exact round trip for doubles.
std::string format_exact(double v);
// Shortest text that parses back to the same double.
std::string format_shortest(double v);
double parse_double(std::string_view text);

// Versioned text formats. Parsers throw ParseError (with line number) on
// malformed or truncated input and VersionError on an unknown version.
//
//   CDUAP-MODEL v1 dims=<d,h1,...,C> seed=<u64>
//   W0 <rows>x<cols> v v v ...
//   b0 <n> v v ...
std::string model_to_text(const MlpClassifier& model);
MlpClassifier model_from_text(std::string_view text);

//   CDUAP-PERT v1 d=<d> eps=<f> norm=<linf|l2>
//   one value per line
std::string perturbation_to_text(const Perturbation& perturbation);
Perturbation perturbation_from_text(std::string_view text);

//   CDUAP-DATA v1 n=<n> d=<d> C=<C> lo=<f> hi=<f>
//   <label> <f1> ... <fd>
std::string dataset_to_text(const LabeledDataset& dataset);
LabeledDataset dataset_from_text(std::string_view text);

// iter,loss_t,loss_nt,loss_w,delta_norm
std::string iteration_log_csv(const std::vector<IterationRecord>& log);

struct ReportRow {
  std::string experiment;
  std::string model;
  std::string spec;
  LossConfig loss;
  double epsilon = 0.0;
  NormOrder norm = NormOrder::Linf;
  std::uint64_t seed = 0;
  EvalReport report;
};

ReportRow make_report_row(std::string experiment, std::string model, const AttackConfig& config,
                          const EvalReport& report);

// experiment,model,spec,t_kind,nt_kind,alpha,beta,eps,norm,acc_t,acc_nt,
// adv_acc_t,adv_acc_nt,aad_t,aad_nt,delta_aad,seed
// Percentages with two decimals; absent values are empty fields.
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_json(const std::vector<ReportRow>& rows);

// Binary PPM (P6) of the perturbation amplified around mid-gray:
// value = clamp(mid + amplification * delta_i * (hi - lo), lo, hi) mapped to
// 0..255. channels = 1 (grayscale, replicated) or 3 (interleaved RGB).
// Grayscale also accepts side = padded_side(d) when d is not a perfect
// square; the trailing pixels are mid-gray.
std::size_t padded_side(std::size_t d);
std::string perturbation_ppm(const Perturbation& perturbation, std::size_t side, double amplification,
                             int channels = 1, FeatureBounds bounds = {});

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

void save_model(const MlpClassifier& model, const std::filesystem::path& path);
MlpClassifier load_model(const std::filesystem::path& path);
void save_perturbation(const Perturbation& perturbation, const std::filesystem::path& path);
Perturbation load_perturbation(const std::filesystem::path& path);
void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

}  // namespace cduap
