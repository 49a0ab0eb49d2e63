#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpgen/experience.hpp"
#include "mpgen/rng.hpp"
#include "mpgen/tensor.hpp"
#include "mpgen/tokenizer.hpp"

namespace mpgen {

struct ModelConfig {
    int vocab = ByteTokenizer::kVocab;
    int dim = 64;       // embedding width
    int layers = 2;
    int heads = 4;      // must divide dim
    int ffn_dim = 256;
    int max_seq = 256;  // positional table size; longest prefix+token run
    int prefix_dim = 0;  // width of visual-prefix input vectors; 0 = text only
};

// Low-rank adapter pair on a frozen linear map. Effective weight is
// W + (alpha/rank)·B·A with B zero at attach time, so attaching never
// changes the forward pass until training moves A and B.
struct LoraAdapter {
    int rank = 16;
    double alpha = 32.0;
    double dropout = 0.05;
    Tensor a;  // rank × in
    Tensor b;  // out × rank
};

struct LinearLayer {
    Tensor w;  // out × in
    std::optional<LoraAdapter> lora;
};

struct LayerParams {
    Tensor ln1_gamma, ln1_beta;
    LinearLayer wq, wk, wv, wo;
    Tensor ln2_gamma, ln2_beta;
    LinearLayer w1, w2;  // feedforward up / down
    Tensor b1, b2;
};

// Decoder-only autoregressive model: token + position embeddings, pre-norm
// attention/feedforward blocks, a final norm and a vocabulary head. An
// optional projector maps fixed-width visual-prefix vectors into leading
// sequence positions. Everything is 64-bit; the same code path serves
// training and the finite-difference checks.
struct TinyModel {
    ModelConfig config;
    Tensor tok_emb;            // vocab × dim
    Tensor pos_emb;            // max_seq × dim
    LinearLayer visual_proj;   // dim × prefix_dim when prefix_dim > 0
    std::vector<LayerParams> layers;
    Tensor lnf_gamma, lnf_beta;
    LinearLayer head;          // vocab × dim; never adapted
    bool lora_attached = false;
};

// Named reference to one parameter tensor; collect_params yields them in a
// fixed order shared by gradients, optimizer moments and checkpoints.
struct ParamRef {
    Tensor* tensor;
    std::string name;
    bool trainable;
};

std::vector<ParamRef> collect_params(TinyModel& model);
std::vector<ParamRef> collect_params(const TinyModel& model);  // tensors cast non-const
std::size_t count_parameters(const TinyModel& model);

// Fresh model with scaled normal init (bitwise deterministic per seed).
TinyModel init_model(const ModelConfig& config, std::uint64_t seed = 42);

// Same tensor layout, every value zero; the container for gradients and
// Adam moments.
TinyModel clone_shape(const TinyModel& model);

// Adds adapters to every linear map except the head and freezes the base.
// Throws AlreadyAttached on a second call.
void attach_lora(TinyModel& model, int rank = 16, double alpha = 32.0,
                 double dropout = 0.05);

// Folds (alpha/rank)·B·A into each W and drops the adapters; the merged
// model reproduces the adapted forward pass.
void merge_lora(TinyModel& model);

// Everything backward needs, captured by the forward pass.
struct ForwardTape {
    int total = 0;   // prefix rows + token count
    int prefix = 0;  // leading positions fed from visual vectors
    std::vector<int> tokens;
    Tensor prefix_in;  // prefix × prefix_dim
    Tensor x0;         // total × dim, embeddings entering layer 0

    struct LinearCache {
        Tensor input;      // rows fed to the map
        Tensor drop_mask;  // adapter-path inverted-dropout scales (empty when off)
        Tensor lora_mid;   // rows × rank
    };
    struct NormCache {
        Tensor input;
        std::vector<double> mean, rstd;
        Tensor normalized;  // (x − mean)·rstd
    };
    struct LayerCache {
        NormCache ln1;
        LinearCache q, k, v, o;
        Tensor qh, kh, vh;         // total × dim, post-projection
        std::vector<Tensor> att;   // per head: total × total softmax weights
        Tensor att_out;            // total × dim, concatenated heads
        Tensor res1;               // input + attention
        NormCache ln2;
        LinearCache up, down;
        Tensor h_pre;              // total × ffn, before activation
        Tensor h_act;              // total × ffn, after activation
    };
    LinearCache visual;
    std::vector<LayerCache> layers;
    NormCache lnf;
    LinearCache head;
    Tensor logits;  // total × vocab
};

// Full causal forward. Token ids must be < vocab (TokenOutOfRange); the
// run must fit max_seq. dropout_rng enables adapter dropout; pass nullptr
// for deterministic evaluation.
void forward(const TinyModel& model, const std::vector<int>& tokens,
             const Tensor* visual_prefix, ForwardTape& tape,
             Rng* dropout_rng = nullptr);

// Accumulates parameter gradients (and nothing else) into `grads`, a
// clone_shape of the model, from d loss / d logits.
void backward(const TinyModel& model, const ForwardTape& tape,
              const Tensor& dlogits, TinyModel& grads);

struct LossOutput {
    double loss = 0.0;     // mean negative log-likelihood over counted tokens
    int token_count = 0;   // multiply back for the sum form
};

// Next-token loss over every predictable position. Throws TooShort on
// sequences under 2 tokens.
LossOutput loss_pretrain(const TinyModel& model, const std::vector<int>& tokens,
                         TinyModel* grads = nullptr, Rng* dropout_rng = nullptr);

// Masked loss over the pair's response span only. Query and padding
// positions contribute nothing. Throws EmptySpan when no response token is
// predictable.
LossOutput loss_instruction(const TinyModel& model, const IconicPair& pair,
                            TinyModel* grads = nullptr,
                            Rng* dropout_rng = nullptr);

struct DpoConfig {
    double beta = 0.1;
    double smoothing = 0.1;  // label-smoothing ε in [0, 0.5)
};

// One preference, tokenized. Responses end with the separator token.
struct TokenizedTriple {
    std::vector<int> prompt;
    std::vector<int> preferred;
    std::vector<int> dispreferred;
};

// Throws SamePair when both responses tokenize identically.
TokenizedTriple tokenize_triple(const PreferenceTriple& triple);

struct DpoOutput {
    double loss = 0.0;
    double delta = 0.0;   // reference-anchored log-prob difference
    double margin = 0.0;  // policy log P(preferred) − log P(dispreferred)
};

// Preference loss −(1−ε)·ln σ(β·Δ) − ε·ln σ(−β·Δ) with
// Δ = [ln P_pol(y_w|x) − ln P_ref(y_w|x)] − [ln P_pol(y_l|x) − ln P_ref(y_l|x)],
// sequence log-probabilities summed over response tokens. Gradients flow to
// the policy only; the reference stays frozen. ε = 0 recovers the plain
// preference loss.
DpoOutput loss_dpo(const TinyModel& policy, const TinyModel& reference,
                   const TokenizedTriple& triple, const DpoConfig& config,
                   TinyModel* grads = nullptr);

// Summed log-probability of the response tokens given the prompt; the
// quantity the preference loss is built from, exposed for margin reports.
double response_log_prob(const TinyModel& model, const std::vector<int>& prompt,
                         const std::vector<int>& response);

}  // namespace mpgen
