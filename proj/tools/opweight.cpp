#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "opweight/errors.hpp"
#include "opweight/json_io.hpp"
#include "opweight/regular.hpp"
#include "opweight/suites.hpp"
#include "opweight/tensor.hpp"

namespace {

using namespace opweight;

struct RunConfig {
  double tol = 1e-9;
  uint64_t seed = 0;
  int samples = 200;
  std::string out;
  std::string format = "json";
};

void apply_thread_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("OPWEIGHT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

// Writes the document (or the text rendering of its report) and returns the
// verdict exit code: 0 when every check passes, 1 otherwise, with the
// failing labels echoed to stderr.
int emit(const RunConfig& rc, Json payload, const Report& rep) {
  payload["report"] = report_to_json(rep);
  const std::string text =
      rc.format == "text" ? report_to_text(rep) : dump_json(payload);
  if (rc.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(rc.out, std::ios::binary);
    if (!f) {
      std::cerr << "cannot write " << rc.out << "\n";
      return 1;
    }
    f << text;
  }
  if (rep.all_pass()) return 0;
  for (const Check& ch : rep.checks) {
    if (!ch.pass && !ch.skipped) {
      std::cerr << "failed: " << ch.label << " residual=" << ch.residual
                << "\n";
    }
  }
  return 1;
}

std::vector<Element> partial_unit_elements(const AlgebraSpec& a) {
  const PartialUnitNet net{a};
  std::vector<Element> out;
  for (int i = 0; i < net.size(); ++i) out.push_back(net.at(i));
  return out;
}

int cmd_ksgns(const RunConfig& rc, const std::string& path) {
  const Weight w = weight_from_json(parse_json_file(path));
  const KsgnsTriplet t = build_canonical_ksgns(w);
  const Report rep = verify_ksgns(w, t, rc.tol);
  Json payload = Json::object();
  payload["triplet"] = triplet_to_json(t);
  return emit(rc, std::move(payload), rep);
}

int cmd_verify(const RunConfig& rc, const std::string& wpath,
               const std::string& tpath) {
  const Weight w = weight_from_json(parse_json_file(wpath));
  const KsgnsTriplet t = triplet_from_json(parse_json_file(tpath));
  const Report rep = verify_ksgns(w, t, rc.tol);
  return emit(rc, Json::object(), rep);
}

int cmd_construct(const RunConfig& rc, const std::string& path) {
  const SeedData seed = seed_from_json(parse_json_file(path));
  const Weight w = construct_weight(seed);
  const KsgnsTriplet t = close_lambda(seed);
  const Report rep = verify_ksgns(w, t, rc.tol);
  Json payload = Json::object();
  payload["weight"] = weight_to_json(w);
  return emit(rc, std::move(payload), rep);
}

int cmd_tensor(const RunConfig& rc, const std::string& p1,
               const std::string& p2) {
  const Weight w1 = weight_from_json(parse_json_file(p1));
  const Weight w2 = weight_from_json(parse_json_file(p2));
  const KsgnsTriplet t1 = build_canonical_ksgns(w1);
  const KsgnsTriplet t2 = build_canonical_ksgns(w2);
  const TruncatingNet net1 =
      verify_truncating_net(w1, t1, partial_unit_elements(w1.A));
  const TruncatingNet net2 =
      verify_truncating_net(w2, t2, partial_unit_elements(w2.A));
  const TensorWeight tw = tensor_weight(w1, t1, net1, w2, t2, net2);
  Report rep = tw.rep;
  rep.merge(check_factorization(tw, rc.tol));
  rep.sort_by_label();
  Json payload = Json::object();
  payload["weight"] = weight_to_json(tw.product);
  return emit(rc, std::move(payload), rep);
}

int cmd_suite(const RunConfig& rc) {
  SuiteConfig sc;
  sc.tol = rc.tol;
  sc.seed = rc.seed;
  sc.samples = rc.samples;
  return emit(rc, Json::object(), run_all_suites(sc));
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();
  CLI::App app{"constructions and certification for operator-valued weights"};
  RunConfig rc;
  app.add_option("--tol", rc.tol, "pass/fail tolerance for report rows")
      ->capture_default_str();
  app.add_option("--seed", rc.seed, "master seed for all random streams")
      ->capture_default_str();
  app.add_option("--samples", rc.samples, "instances per property suite")
      ->capture_default_str();
  app.add_option("--out", rc.out, "write output here instead of stdout");
  app.add_option("--format", rc.format, "output format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  app.require_subcommand(1);

  std::string in1, in2;
  CLI::App* ksgns = app.add_subcommand(
      "ksgns", "canonical represented triplet of a weight file");
  ksgns->add_option("weight", in1, "weight JSON file")->required();
  CLI::App* verify = app.add_subcommand(
      "verify", "check a stored triplet against a weight file");
  verify->add_option("weight", in1, "weight JSON file")->required();
  verify->add_option("triplet", in2, "triplet JSON file")->required();
  CLI::App* construct = app.add_subcommand(
      "construct", "weight induced by a seed-module file");
  construct->add_option("seed", in1, "seed JSON file")->required();
  CLI::App* tensor = app.add_subcommand(
      "tensor", "tensor product of two weight files");
  tensor->add_option("first", in1, "first weight JSON file")->required();
  tensor->add_option("second", in2, "second weight JSON file")->required();
  app.add_subcommand("suite", "run every property suite at the given budget");
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ksgns->parsed()) return cmd_ksgns(rc, in1);
    if (verify->parsed()) return cmd_verify(rc, in1, in2);
    if (construct->parsed()) return cmd_construct(rc, in1);
    if (tensor->parsed()) return cmd_tensor(rc, in1, in2);
    return cmd_suite(rc);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const NotCompletelyPositive& e) {
    std::cerr << "not completely positive: " << e.what()
              << " (negative eigenvalue " << e.min_eigenvalue << ")\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
