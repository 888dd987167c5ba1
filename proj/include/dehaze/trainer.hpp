#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dehaze/adam.hpp"
#include "dehaze/config.hpp"
#include "dehaze/discriminator.hpp"
#include "dehaze/generator.hpp"
#include "dehaze/glda.hpp"
#include "dehaze/haze.hpp"
#include "dehaze/image.hpp"
#include "dehaze/losses.hpp"

namespace dehaze {

enum class Provenance : uint8_t { synthesized = 0, glda_augmented = 1 };

struct Batch {
    Tensor hazy;   // [N,3,P,P]
    Tensor clean;  // [N,3,P,P], index-aligned targets
    std::vector<Provenance> tags;
};

// Generator, the discriminators the toggles call for, their optimizers, the
// step counter and the seed. Which discriminators exist is decided at
// creation and never changes within a run:
//   lf_prior -> 6-channel LF discriminator, hf_prior -> 6-channel HF one;
//   neither prior but a nonzero lambda -> one 3-channel discriminator in the
//   LF slot ("simple discriminator" ablation); all lambdas zero and no
//   priors -> reconstruction-only baseline.
struct ModelState {
    RunConfig cfg;
    uint64_t step = 0;
    std::unique_ptr<Generator> generator;
    std::unique_ptr<Discriminator> d_lf;
    std::unique_ptr<Discriminator> d_hf;
    bool simple_d = false;
    AdamState opt_g, opt_d_lf, opt_d_hf;
    PerceptualNet pnet;

    ModelState() : pnet(PerceptualNet::kDefaultSeed) {}
    std::vector<Tensor> generator_parameters() { return generator->parameters(); }
};

ModelState init_state(const RunConfig& cfg);

struct StepScalars {
    uint64_t step = 0;
    double loss_g = 0.0;
    double loss_d_lf = 0.0;
    double loss_d_hf = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    bool has_metrics = false;
};

// Random P x P crops, on-the-fly haze synthesis, optional GLDA replacement
// (p = 0.5) and paired flips. Deterministic given the stream.
Batch build_batch(const std::vector<Image>& clean_pool, RngStream& rng,
                  const RunConfig& cfg);

// One alternating step: D_LF then D_HF on detached fakes, then a fresh
// generator forward scored against the just-updated discriminators.
StepScalars train_step(ModelState& st, const Batch& batch);

struct TrainLog {
    std::vector<StepScalars> rows;
};

// Runs st.step -> cfg.steps; logs every step, evaluates a held-out mini-set
// every 50 steps, checkpoints every 100 steps (and at the end) when ckpt_dir
// is nonempty. `echo`, when given, receives tab-separated log lines.
TrainLog train_loop(ModelState& st, const std::vector<Image>& clean_pool,
                    const std::string& ckpt_dir, std::ostream* echo);

struct EvalPair {
    std::string name;
    Image hazy;
    Image clean;
};

struct MetricRow {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct EvalResult {
    std::vector<MetricRow> rows;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double baseline_psnr = 0.0;  // hazy inputs scored against clean
    double baseline_ssim = 0.0;
};

// Center-crops pairs to a multiple of 16 where needed, runs the generator in
// eval mode, and reports per-pair plus mean metrics and the hazy baseline.
EvalResult evaluate(ModelState& st, const std::vector<EvalPair>& pairs);

// Eval-mode generator pass on one image (center-cropped to a multiple of 16).
Image infer_image(ModelState& st, const Image& hazy);

// Mean D(real-prior) - mean D(fake-prior), eval mode, per discriminator.
struct DiscGap {
    double lf = 0.0;
    double hf = 0.0;
};
DiscGap discriminator_gap(ModelState& st, const Batch& batch);

std::string format_log_row(const StepScalars& s);

}  // namespace dehaze
