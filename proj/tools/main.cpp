#include <string>

#include <CLI11.hpp>

#include "common.hpp"
#include "deblur/errors.hpp"

using namespace deblur;
using namespace deblur::cli;

namespace {

// Exit contract: 0 ok, 1 threshold/gradcheck failure, 2 usage, 3 I/O,
// 4 numeric. Every error leaves one machine-parsable line on stderr.
int fail(int code, const char* kind, const std::string& message) {
  emit_event({{"event", "error"}, {"code", kind}, {"message", message}});
  return code;
}

RunConfig base_config(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blind motion deblurring: synthesize data, train the estimator, "
               "deblur images, check gradients, evaluate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "deblur 1.0");

  bool quiet = false;
  int threads = 0;
  app.add_flag("--quiet", quiet, "suppress progress events on stderr");
  auto* opt_threads =
      app.add_option("--threads", threads, "worker threads (0 = all cores)");

  int rc = 0;
  auto finish = [&](RunConfig& cfg, int (*body)(const RunConfig&)) {
    cfg.run.quiet = cfg.run.quiet || quiet;
    if (opt_threads->count()) cfg.run.threads = threads;
    rc = body(cfg);
  };

  // ---- synth ----
  auto* synth = app.add_subcommand(
      "synth", "generate blurred samples with ground-truth kernels");
  synth->fallthrough();  // --quiet/--threads may trail the subcommand
  struct {
    std::string config, corpus, out;
    int n = 0, kernel = 0, crop = 0;
    double noise = 0.0;
    long long seed = 0;
  } sy;
  synth->add_option("--config", sy.config, "settings file");
  auto* sy_corpus =
      synth->add_option("--corpus", sy.corpus, "directory of sharp images");
  auto* sy_out = synth->add_option("--out", sy.out, "output directory");
  auto* sy_n = synth->add_option("--n", sy.n, "number of samples");
  auto* sy_kernel = synth->add_option("--kernel", sy.kernel, "kernel size (odd)");
  auto* sy_crop = synth->add_option("--crop", sy.crop, "sample crop size");
  auto* sy_noise = synth->add_option("--noise", sy.noise, "Gaussian noise sigma");
  auto* sy_seed = synth->add_option("--seed", sy.seed, "random seed");
  synth->callback([&] {
    RunConfig cfg = base_config(sy.config);
    if (sy_corpus->count()) cfg.synth.corpus = sy.corpus;
    if (sy_out->count()) cfg.synth.out_dir = sy.out;
    if (sy_n->count()) cfg.synth.count = sy.n;
    if (sy_kernel->count()) cfg.synth.kernel_size = sy.kernel;
    if (sy_crop->count()) cfg.synth.crop = sy.crop;
    if (sy_noise->count()) cfg.synth.noise_sigma = sy.noise;
    if (sy_seed->count()) cfg.synth.seed = static_cast<uint64_t>(sy.seed);
    finish(cfg, run_synth);
  });

  // ---- train ----
  auto* train = app.add_subcommand("train", "train the kernel estimator");
  train->fallthrough();  // --quiet/--threads may trail the subcommand
  struct {
    std::string config, preset, corpus, out, resume, report;
    int kernel = 0, steps = 0;
    long long seed = 0;
  } tr;
  train->add_option("--config", tr.config, "settings file");
  auto* tr_preset =
      train->add_option("--preset", tr.preset, "architecture preset (stack3|smoke)");
  auto* tr_corpus = train->add_option("--corpus", tr.corpus,
                                      "sharp image directory (default: built-in "
                                      "procedural textures)");
  auto* tr_kernel = train->add_option(
      "--kernel", tr.kernel, "finest kernel size; the coarse cascade is derived");
  auto* tr_steps = train->add_option("--steps", tr.steps, "steps per scale");
  auto* tr_out = train->add_option("--out", tr.out, "output model path (.dbm)");
  auto* tr_resume = train->add_option("--resume", tr.resume, "checkpoint to continue");
  auto* tr_seed = train->add_option("--seed", tr.seed, "random seed");
  auto* tr_report = train->add_option("--report", tr.report, "JSONL report path");
  train->callback([&] {
    RunConfig cfg = base_config(tr.config);
    if (tr_preset->count()) apply_preset(cfg, tr.preset);
    if (tr_corpus->count()) cfg.train.corpus = tr.corpus;
    if (tr_kernel->count()) cfg.train.kernel_sizes = kernel_ladder(tr.kernel);
    if (tr_steps->count()) cfg.train.steps = tr.steps;
    if (tr_out->count()) cfg.train.out_model = tr.out;
    if (tr_resume->count()) cfg.train.resume = tr.resume;
    if (tr_seed->count()) cfg.train.seed = static_cast<uint64_t>(tr.seed);
    if (tr_report->count()) cfg.train.report = tr.report;
    finish(cfg, run_train);
  });

  // ---- deblur ----
  auto* deblur = app.add_subcommand("deblur", "blind-deblur one image");
  deblur->fallthrough();  // --quiet/--threads may trail the subcommand
  struct {
    std::string config, image, model, out, policy;
    bool varying = false;
    double eta = 0.0, overlap = 0.0;
    int patch = 0;
  } db;
  deblur->add_option("image", db.image, "blurry input image (PNG/PGM)");
  deblur->add_option("--config", db.config, "settings file");
  auto* db_model = deblur->add_option("--model", db.model, "trained model (.dbm)");
  auto* db_out = deblur->add_option("--out", db.out, "output directory");
  auto* db_policy =
      deblur->add_option("--policy", db.policy, "scale policy (kernel-ratio|factor-two)");
  auto* db_varying = deblur->add_flag("--spatially-varying", db.varying,
                                      "per-patch kernels + motion-basis projection");
  auto* db_eta = deblur->add_option(
      "--eta", db.eta, "fraction of motion coefficients kept (e.g. 0.0314)");
  auto* db_patch = deblur->add_option("--patch-size", db.patch,
                                      "patch edge in px (0 = image/4)");
  auto* db_overlap = deblur->add_option("--overlap", db.overlap, "patch overlap fraction");
  deblur->callback([&] {
    RunConfig cfg = base_config(db.config);
    if (!db.image.empty()) cfg.deblur.input = db.image;
    if (db_model->count()) cfg.deblur.model = db.model;
    if (db_out->count()) cfg.deblur.out_dir = db.out;
    if (db_policy->count()) cfg.deblur.policy = db.policy;
    if (db_varying->count()) cfg.deblur.spatially_varying = db.varying;
    if (db_eta->count()) cfg.deblur.eta = db.eta;
    if (db_patch->count()) cfg.deblur.patch_size = db.patch;
    if (db_overlap->count()) cfg.deblur.patch_overlap = db.overlap;
    finish(cfg, run_deblur);
  });

  // ---- gradcheck ----
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "compare every backward pass against finite differences");
  gradcheck->fallthrough();  // --quiet/--threads may trail the subcommand
  struct {
    std::string config, corrupt;
    long long seed = 0;
    double step = 0.0, tol = 0.0;
    int instances = 0;
  } gc;
  gradcheck->add_option("--config", gc.config, "settings file");
  auto* gc_seed = gradcheck->add_option("--seed", gc.seed, "random seed");
  auto* gc_step = gradcheck->add_option("--step", gc.step, "finite-difference step");
  auto* gc_tol = gradcheck->add_option("--tol", gc.tol, "max relative error");
  auto* gc_inst = gradcheck->add_option("--instances", gc.instances,
                                        "random instances per quotient row");
  auto* gc_corrupt = gradcheck->add_option(
      "--corrupt", gc.corrupt, "fault hook: layer whose gradient is perturbed");
  gradcheck->callback([&] {
    RunConfig cfg = base_config(gc.config);
    if (gc_seed->count()) cfg.gradcheck.seed = static_cast<uint64_t>(gc.seed);
    if (gc_step->count()) cfg.gradcheck.step = gc.step;
    if (gc_tol->count()) cfg.gradcheck.tolerance = gc.tol;
    if (gc_inst->count()) cfg.gradcheck.instances = gc.instances;
    if (gc_corrupt->count()) cfg.gradcheck.corrupt = gc.corrupt;
    finish(cfg, run_gradcheck);
  });

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "score a model over a sample manifest");
  eval->fallthrough();  // --quiet/--threads may trail the subcommand
  struct {
    std::string config, model, manifest, csv, jsonl, thresholds;
    bool runtime = false;
  } ev;
  eval->add_option("--config", ev.config, "settings file");
  auto* ev_model = eval->add_option("--model", ev.model, "trained model (.dbm)");
  auto* ev_manifest = eval->add_option("--manifest", ev.manifest, "manifest.json");
  auto* ev_csv = eval->add_option("--csv", ev.csv, "metrics CSV path");
  auto* ev_jsonl = eval->add_option("--jsonl", ev.jsonl, "JSONL records path");
  auto* ev_thresholds = eval->add_option("--thresholds", ev.thresholds,
                                         "gate file; violations exit 1");
  auto* ev_runtime = eval->add_flag("--runtime-table", ev.runtime,
                                    "time the size × kernel grid");
  eval->callback([&] {
    RunConfig cfg = base_config(ev.config);
    if (ev_model->count()) cfg.eval.model = ev.model;
    if (ev_manifest->count()) cfg.eval.manifest = ev.manifest;
    if (ev_csv->count()) cfg.eval.out_csv = ev.csv;
    if (ev_jsonl->count()) cfg.eval.out_jsonl = ev.jsonl;
    if (ev_thresholds->count()) cfg.eval.thresholds = ev.thresholds;
    if (ev_runtime->count()) cfg.eval.runtime_table = ev.runtime;
    finish(cfg, run_eval);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const IoError& e) {
    return fail(3, "io", e.what());
  } catch (const DimensionError& e) {
    return fail(4, "dimension", e.what());
  } catch (const NumericError& e) {
    return fail(4, "numeric", e.what());
  } catch (const std::exception& e) {
    return fail(4, "internal", e.what());
  }
  return rc;
}
