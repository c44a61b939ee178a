#include "hops/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hops/descriptor_store.hpp"
#include "hops/errors.hpp"
#include "hops/evaluation.hpp"
#include "hops/fusion.hpp"
#include "hops/matching.hpp"
#include "hops/projection.hpp"
#include "hops/report.hpp"
#include "hops/synth_bench.hpp"

namespace hops::cli {

namespace {

struct EvalOptions {
  std::string manifest;
  std::string query;
  std::vector<std::string> strategies;
  std::string out;
  std::vector<std::size_t> recall_ns = {1, 5, 10};
  std::optional<std::int64_t> tolerance;
  std::size_t project_dim = 0;
  std::optional<std::uint64_t> project_seed;
  bool allow_expansion = false;
  bool progression = false;
  std::vector<std::size_t> sweep_dims;
};

struct FuseOptions {
  std::string manifest;
  std::vector<std::string> conditions;
  std::vector<std::string> exclude;
  std::string out;
  bool raw = false;
  bool groups = false;
  bool signature = false;
};

struct ProjectOptions {
  std::string in;
  std::string out;
  std::size_t dim = 0;
  bool allow_expansion = false;
};

struct IdentifyOptions {
  std::string query;
  std::vector<std::string> signatures;
  std::string out;
};

struct SynthOptions {
  SynthSpec spec;
  std::string out;
  std::int64_t tolerance = 0;
};

struct DiffOptions {
  std::string a;
  std::string b;
  std::string out;
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 0;
};

void apply_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("HOPS_THREADS")) threads = std::atoi(env);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

std::vector<DescriptorSet> load_references(const DatasetManifest& manifest, const std::string& query) {
  std::vector<DescriptorSet> refs;
  for (const auto& e : manifest.sets) {
    if (e.condition_id != query) refs.push_back(load_normalized(manifest, e));
  }
  return refs;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report", path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

int cmd_eval(const EvalOptions& o, const GlobalOptions& g, std::ostream& out) {
  // Validate the strategies before touching any data.
  std::vector<Strategy> strategies;
  for (const auto& s : o.strategies) strategies.push_back(parse_strategy(s));

  const auto manifest = load_manifest(o.manifest);
  if (manifest.correspondence != Correspondence::index_aligned) {
    throw ConfigError("eval requires an index_aligned manifest; fuse place groups with 'fuse --groups' first");
  }
  const auto queries = load_normalized(manifest, manifest.entry(o.query));
  auto refs = load_references(manifest, o.query);
  std::vector<DescriptorSet> all = refs;
  all.push_back(queries);
  align_sets(manifest, std::move(all));

  EvalConfig config;
  config.tolerance_frames = o.tolerance.value_or(manifest.tolerance_frames);
  config.recall_ns = o.recall_ns;
  config.validate();

  const std::uint64_t projection_seed = o.project_seed.value_or(g.seed);
  std::optional<ProjectionSpec> projection;
  if (o.project_dim > 0) {
    projection = ProjectionSpec{queries.dim(), o.project_dim, projection_seed, o.allow_expansion};
    projection->validate();
    if (o.project_dim > queries.dim()) out << "warning: projecting to a higher dimension\n";
  }

  EvalReport report;
  report.dataset_id = manifest.dataset_id;
  report.query_condition = o.query;
  report.tolerance_frames = config.tolerance_frames;
  report.recall_ns = config.recall_ns;
  report.projection = projection;
  report.seed = g.seed;
  report.generated_at = utc_timestamp();
  report.config_echo = {{"command", "eval"},
                        {"manifest", o.manifest},
                        {"query", o.query},
                        {"strategies", o.strategies},
                        {"recall_ns", o.recall_ns},
                        {"tolerance_frames", config.tolerance_frames},
                        {"project_dim", o.project_dim},
                        {"project_seed", projection_seed},
                        {"allow_expansion", o.allow_expansion},
                        {"progression", o.progression},
                        {"sweep_dims", o.sweep_dims},
                        {"seed", g.seed}};

  for (const auto& strategy : strategies) {
    StrategyReport sr;
    sr.strategy = strategy.name();
    sr.query_condition = o.query;
    if (strategy.kind == Strategy::Kind::single) {
      sr.reference_conditions = {strategy.condition};
    } else {
      for (const auto& r : refs) sr.reference_conditions.push_back(r.condition_id());
    }
    const auto ranking = run_strategy(strategy, queries, refs, projection);
    sr.recall = recall_at_n(ranking, config);
    sr.histogram = error_histogram(ranking, config);
    out << sr.strategy;
    for (const auto& [n, v] : sr.recall) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "  R@%zu %.1f%%", n, 100.0 * v);
      out << buf;
    }
    out << '\n';
    report.strategies.push_back(std::move(sr));
  }

  if (o.progression) report.progression = fusion_progression(queries, refs, config);
  if (!o.sweep_dims.empty()) {
    const auto fused = bundle_aligned(refs).as_descriptor_set();
    report.sweep = dimensionality_sweep(queries, fused, o.sweep_dims, projection_seed, config, o.allow_expansion);
  }
  write_report(report, o.out);
  out << "wrote report to " << o.out << '\n';
  return kExitOk;
}

int cmd_fuse(const FuseOptions& o, std::ostream& out) {
  const auto manifest = load_manifest(o.manifest);
  std::vector<DescriptorSet> sets;
  const auto wanted = [&](const std::string& c) {
    if (std::find(o.exclude.begin(), o.exclude.end(), c) != o.exclude.end()) return false;
    return o.conditions.empty() || std::find(o.conditions.begin(), o.conditions.end(), c) != o.conditions.end();
  };
  if (!o.conditions.empty()) {
    for (const auto& c : o.conditions) {
      if (wanted(c)) sets.push_back(load_normalized(manifest, manifest.entry(c)));
    }
  } else {
    for (const auto& e : manifest.sets) {
      if (wanted(e.condition_id)) sets.push_back(load_normalized(manifest, e));
    }
  }
  if (sets.empty()) throw EmptyInputError("no sets selected for fusion");

  if (o.signature) {
    const auto sig = bundle_dataset(sets);
    save_set(sig.as_descriptor_set(), o.out);
    out << "dataset signature of " << sig.dataset_id << " over " << sig.source_set_count << " sets ("
        << sig.source_vector_count << " vectors) -> " << o.out << '\n';
    return kExitOk;
  }
  FusionOptions options{!o.raw};
  if (o.groups) {
    if (!manifest.place_groups) throw ConfigError("manifest has no place_groups");
    if (sets.size() != 1) throw UsageError("--groups fuses exactly one set; select it with --conditions");
    const auto fused = bundle_groups(sets.front(), *manifest.place_groups, options);
    save_set(fused.as_descriptor_set(), o.out);
    out << fused.condition_id() << ": " << sets.front().count() << " rows -> " << fused.count << " places -> "
        << o.out << '\n';
    return kExitOk;
  }
  std::vector<DescriptorSet> ordered = sets;
  if (manifest.correspondence == Correspondence::index_aligned) ordered = align_sets(manifest, std::move(ordered));
  const auto fused = bundle_aligned(ordered, options);
  save_set(fused.as_descriptor_set(), o.out);
  out << fused.condition_id() << ": " << fused.count << "x" << fused.dim << " -> " << o.out << '\n';
  return kExitOk;
}

int cmd_project(const ProjectOptions& o, const GlobalOptions& g, std::ostream& out) {
  const auto set = l2_normalize(load_set(o.in)).set;
  const ProjectionSpec spec{set.dim(), o.dim, g.seed, o.allow_expansion};
  spec.validate();
  if (o.dim > set.dim()) out << "warning: projecting to a higher dimension\n";
  const auto projected = project(spec, set);
  save_set(projected.set, o.out);
  out << set.count() << " rows " << set.dim() << " -> " << o.dim << " dims (seed " << g.seed << ")";
  if (projected.zero_rows) out << ", " << projected.zero_rows << " zero rows";
  out << " -> " << o.out << '\n';
  return kExitOk;
}

int cmd_identify(const IdentifyOptions& o, std::ostream& out) {
  const auto queries = l2_normalize(load_set(o.query)).set;
  std::vector<DatasetSignature> signatures;
  for (const auto& path : o.signatures) signatures.push_back(DatasetSignature::from_descriptor_set(load_set(path)));
  std::ostringstream csv;
  csv << "query,frame_id,dataset_id,similarity\n";
  std::map<std::string, std::size_t> tally;
  for (std::size_t i = 0; i < queries.count(); ++i) {
    const auto id = identify_dataset(queries.row(i), signatures);
    char sim[32];
    std::snprintf(sim, sizeof sim, "%.6f", id.similarities[id.index]);
    csv << i << ',' << queries.frame_ids()[i] << ',' << id.dataset_id << ',' << sim << '\n';
    ++tally[id.dataset_id];
  }
  write_text_file(o.out, csv.str());
  for (const auto& [name, count] : tally) out << name << ": " << count << " queries\n";
  return kExitOk;
}

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const auto manifest = write_synth(o.spec, o.out, o.tolerance);
  out << "wrote " << manifest.sets.size() << " sets of " << o.spec.places << "x" << o.spec.dim << " to " << o.out
      << '\n';
  return kExitOk;
}

int cmd_diff(const DiffOptions& o, std::ostream& out) {
  const auto text = diff_reports(read_json(o.a), read_json(o.b));
  if (!o.out.empty()) write_text_file(o.out, text);
  out << text;
  return kExitOk;
}

int cmd_info(const std::string& path, std::ostream& out) {
  const auto set = load_set(path);
  const auto normalized = l2_normalize(set);
  double norm_sum = 0.0;
  for (std::size_t i = 0; i < set.count(); ++i) {
    double sq = 0.0;
    for (float v : set.row(i)) sq += static_cast<double>(v) * v;
    norm_sum += std::sqrt(sq);
  }
  out << "file: " << path << '\n'
      << "rows: " << set.count() << '\n'
      << "cols: " << set.dim() << '\n'
      << "zero_rows: " << normalized.zero_rows << '\n'
      << "mean_norm: " << norm_sum / static_cast<double>(set.count()) << '\n'
      << "first_frame: " << set.frame_ids().front() << '\n'
      << "last_frame: " << set.frame_ids().back() << '\n';
  if (set.count() == 1 && set.frame_ids().front() != "0") out << "signature_dataset: " << set.frame_ids().front() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Descriptor fusion and retrieval for visual place recognition", "hops"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for every random choice (projection, synthesis)");
  app.add_option("--threads", global.threads, "Worker thread cap (env HOPS_THREADS)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate retrieval strategies and write a report");
  eval_cmd->add_option("--manifest", eval.manifest, "Dataset manifest JSON")->required();
  eval_cmd->add_option("--query", eval.query, "Query condition id")->required();
  eval_cmd->add_option("--strategy", eval.strategies, "single:<condition> | hops | pool | dmat:<mean|min|max|median>")
      ->required();
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--recall-n", eval.recall_ns, "Recall@N values")->delimiter(',');
  eval_cmd->add_option("--tolerance", eval.tolerance, "Override the manifest frame tolerance");
  eval_cmd->add_option("--project-dim", eval.project_dim, "Gaussian random projection output dim");
  eval_cmd->add_option("--project-seed", eval.project_seed, "Projection seed (defaults to --seed)");
  eval_cmd->add_flag("--allow-expansion", eval.allow_expansion, "Permit projecting to a higher dimension");
  eval_cmd->add_flag("--progression", eval.progression, "Also evaluate incremental fusion K=1..all");
  eval_cmd->add_option("--sweep-dims", eval.sweep_dims, "Dimensionality sweep over the fused references")
      ->delimiter(',');
  eval_cmd->add_option("--seed", global.seed, "Seed");
  eval_cmd->add_option("--threads", global.threads, "Worker thread cap");

  FuseOptions fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Bundle reference sets into one fused set or dataset signature");
  fuse_cmd->add_option("--manifest", fuse.manifest, "Dataset manifest JSON")->required();
  fuse_cmd->add_option("--conditions", fuse.conditions, "Conditions to fuse, in order (default: all)")
      ->delimiter(',');
  fuse_cmd->add_option("--exclude", fuse.exclude, "Conditions to leave out")->delimiter(',');
  fuse_cmd->add_option("--out", fuse.out, "Output descriptor file")->required();
  fuse_cmd->add_flag("--raw", fuse.raw, "Store the plain sum without renormalizing");
  fuse_cmd->add_flag("--groups", fuse.groups, "Fuse the manifest's place groups within one set");
  fuse_cmd->add_flag("--signature", fuse.signature, "Bundle every row into one dataset signature");
  fuse_cmd->add_option("--threads", global.threads, "Worker thread cap");

  ProjectOptions proj;
  auto* project_cmd = app.add_subcommand("project", "Gaussian random projection of a descriptor file");
  project_cmd->add_option("--in", proj.in, "Input descriptor file")->required();
  project_cmd->add_option("--out", proj.out, "Output descriptor file")->required();
  project_cmd->add_option("--dim", proj.dim, "Output dimension")->required();
  project_cmd->add_flag("--allow-expansion", proj.allow_expansion, "Permit projecting to a higher dimension");
  project_cmd->add_option("--seed", global.seed, "Projection seed");
  project_cmd->add_option("--threads", global.threads, "Worker thread cap");

  IdentifyOptions ident;
  auto* identify_cmd = app.add_subcommand("identify", "Label each query descriptor with its closest dataset");
  identify_cmd->add_option("--query", ident.query, "Query descriptor file")->required();
  identify_cmd->add_option("--signature", ident.signatures, "Dataset signature file (repeatable)")->required();
  identify_cmd->add_option("--out", ident.out, "Output CSV")->required();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--dim", synth.spec.dim, "Descriptor dimension");
  synth_cmd->add_option("--places", synth.spec.places, "Places per condition");
  synth_cmd->add_option("--refs", synth.spec.references, "Reference conditions (a query condition is added)");
  synth_cmd->add_option("--sigma", synth.spec.latent_noise_sigma, "Per-descriptor noise scale");
  synth_cmd->add_option("--beta", synth.spec.structured_bias, "Per-condition bias scale");
  synth_cmd->add_option("--rho", synth.spec.place_correlation, "Correlation between neighbouring places");
  synth_cmd->add_option("--intrinsic-dim", synth.spec.intrinsic_dim, "Latent dimension (equal to --dim for isotropic noise)");
  synth_cmd->add_option("--dataset-id", synth.spec.dataset_id, "Dataset id written to the manifest");
  synth_cmd->add_option("--tolerance", synth.tolerance, "Frame tolerance written to the manifest");
  synth_cmd->add_option("--seed", global.seed, "Generator seed");

  DiffOptions diff;
  auto* diff_cmd = app.add_subcommand("diff", "Compare the recall of two report.json files");
  diff_cmd->add_option("a", diff.a, "First report.json")->required();
  diff_cmd->add_option("b", diff.b, "Second report.json")->required();
  diff_cmd->add_option("--out", diff.out, "Also write the comparison CSV here");

  std::string info_path;
  auto* info_cmd = app.add_subcommand("info", "Describe a descriptor file");
  info_cmd->add_option("file", info_path, "Descriptor file")->required();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("hops");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    apply_threads(global.threads);
    if (*eval_cmd) return cmd_eval(eval, global, out);
    if (*fuse_cmd) return cmd_fuse(fuse, out);
    if (*project_cmd) return cmd_project(proj, global, out);
    if (*identify_cmd) return cmd_identify(ident, out);
    if (*synth_cmd) {
      synth.spec.seed = global.seed;
      return cmd_synth(synth, out);
    }
    if (*diff_cmd) return cmd_diff(diff, out);
    if (*info_cmd) return cmd_info(info_path, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace hops::cli
