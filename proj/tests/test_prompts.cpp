#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "promptstream/errors.hpp"
#include "promptstream/prompts.hpp"

using namespace promptstream;

namespace {

PromptConfig tiny_config() {
    PromptConfig cfg;
    cfg.length = 4;
    cfg.dim = 6;
    return cfg;
}

PromptPool make_pool(const PromptConfig& cfg, uint64_t seed = 99) {
    Rng rng(seed);
    return PromptPool(cfg, PromptSchedule{}, rng);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0;
    for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

}  // namespace

TEST_CASE("pattern to task id follows the fixed enumeration") {
    CHECK(task_id_from_pattern(MissingPattern{false, false, false}) == 1);
    CHECK(task_id_from_pattern(MissingPattern{false, false, true}) == 2);
    CHECK(task_id_from_pattern(MissingPattern{false, true, false}) == 3);
    CHECK(task_id_from_pattern(MissingPattern{true, false, false}) == 4);
    CHECK(task_id_from_pattern(MissingPattern{false, true, true}) == 5);
    CHECK(task_id_from_pattern(MissingPattern{true, false, true}) == 6);
    CHECK(task_id_from_pattern(MissingPattern{true, true, false}) == 7);
    CHECK_THROWS_AS(task_id_from_pattern(MissingPattern{true, true, true}), DomainError);
    for (int t = 1; t <= kNumTasks; ++t) {
        CHECK(task_id_from_pattern(pattern_from_task_id(t)) == t);
    }
    CHECK_THROWS_AS(pattern_from_task_id(0), DomainError);
    CHECK_THROWS_AS(pattern_from_task_id(8), DomainError);
}

TEST_CASE("task-aware prompt matches a plain-double recomputation per pattern") {
    PromptPool pool = make_pool(tiny_config());
    oracles::PlainPool plain;
    plain.length = 4;
    plain.dim = 6;
    plain.ms = pool.params().at("prompts/ms").tensor.data();
    plain.key_missing = pool.key_missing().data();
    plain.key_available = pool.key_available().data();

    for (int t = 1; t <= kNumTasks; ++t) {
        const MissingPattern p = pattern_from_task_id(t);
        Tensor ta = pool.task_aware_prompt(p);
        // Row-mean both, then compare (the oracle computes mean embeddings).
        Tensor mean = ops::mean(ta, 0);
        const std::vector<double> expected = oracles::plain_task_embedding(plain, t);
        CHECK(max_abs_diff(mean.data(), expected) < 1e-12);
    }
}

TEST_CASE("complete pattern uses only the available key") {
    PromptConfig cfg = tiny_config();
    PromptPool pool = make_pool(cfg);
    const auto& ms = pool.params().at("prompts/ms").tensor.data();
    const auto& ku = pool.key_available().data();

    Tensor ta = pool.task_aware_prompt(MissingPattern{false, false, false});
    for (int r = 0; r < cfg.length; ++r) {
        for (int c = 0; c < cfg.dim; ++c) {
            double expected = 0;
            for (int m = 0; m < kNumModalities; ++m) {
                expected += ku[c] * ms[(m * cfg.length + r) * cfg.dim + c];
            }
            CHECK(ta.at({r, c}) == doctest::Approx(expected).epsilon(1e-14));
        }
    }
}

TEST_CASE("audio-missing pattern gates only the audio prompt with the missing key") {
    PromptConfig cfg = tiny_config();
    PromptPool pool = make_pool(cfg);
    const auto& ms = pool.params().at("prompts/ms").tensor.data();
    const auto& km = pool.key_missing().data();
    const auto& ku = pool.key_available().data();

    Tensor ta = pool.task_aware_prompt(MissingPattern{true, false, false});
    for (int r = 0; r < cfg.length; ++r) {
        for (int c = 0; c < cfg.dim; ++c) {
            const double expected = km[c] * ms[(0 * cfg.length + r) * cfg.dim + c] +
                                    ku[c] * ms[(1 * cfg.length + r) * cfg.dim + c] +
                                    ku[c] * ms[(2 * cfg.length + r) * cfg.dim + c];
            CHECK(ta.at({r, c}) == doctest::Approx(expected).epsilon(1e-14));
        }
    }
}

TEST_CASE("all-ones keys collapse the pattern dependence exactly") {
    PromptConfig cfg = tiny_config();
    cfg.keys_init_ones = true;
    PromptPool pool = make_pool(cfg);
    std::vector<double> reference;
    for (int t = 1; t <= kNumTasks; ++t) {
        Tensor ta = pool.task_aware_prompt(pattern_from_task_id(t));
        if (t == 1) {
            reference = ta.data();
        } else {
            CHECK(max_abs_diff(ta.data(), reference) == 0.0);
        }
    }
}

TEST_CASE("generation is linear in the shared prompts") {
    PromptConfig cfg = tiny_config();
    PromptPool pool = make_pool(cfg);
    Tensor ms = pool.params().at("prompts/ms").tensor;

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> a(ms.numel()), b(ms.numel());
    for (auto& v : a) v = dist(rng);
    for (auto& v : b) v = dist(rng);

    const MissingPattern p = pattern_from_task_id(6);
    ms.mutable_data() = a;
    const std::vector<double> ta_a = pool.task_aware_prompt(p).data();
    ms.mutable_data() = b;
    const std::vector<double> ta_b = pool.task_aware_prompt(p).data();
    std::vector<double> sum(ms.numel());
    for (size_t i = 0; i < sum.size(); ++i) sum[i] = a[i] + b[i];
    ms.mutable_data() = sum;
    const std::vector<double> ta_sum = pool.task_aware_prompt(p).data();
    for (size_t i = 0; i < ta_sum.size(); ++i) {
        CHECK(std::fabs(ta_sum[i] - (ta_a[i] + ta_b[i])) < 1e-10);
    }
}

TEST_CASE("generic keys separate all seven patterns") {
    PromptPool pool = make_pool(tiny_config(), 123);
    std::vector<std::vector<double>> tas;
    for (int t = 1; t <= kNumTasks; ++t) {
        tas.push_back(pool.task_aware_prompt(pattern_from_task_id(t)).data());
    }
    for (size_t i = 0; i < tas.size(); ++i) {
        for (size_t j = i + 1; j < tas.size(); ++j) {
            CHECK(max_abs_diff(tas[i], tas[j]) > 1e-9);
        }
    }
}

TEST_CASE("key-role inversion equals swapping the two keys") {
    PromptConfig cfg = tiny_config();
    Rng rng1(7), rng2(7);
    PromptPool normal(cfg, PromptSchedule{}, rng1);
    cfg.invert_key_roles = true;
    PromptPool inverted(cfg, PromptSchedule{}, rng2);
    // Same seed, so both pools share values; swap the inverted pool's keys.
    std::swap(inverted.key_missing().node()->data, inverted.key_available().node()->data);

    for (int t = 1; t <= kNumTasks; ++t) {
        const MissingPattern p = pattern_from_task_id(t);
        CHECK(max_abs_diff(normal.task_aware_prompt(p).data(),
                           inverted.task_aware_prompt(p).data()) == 0.0);
    }
}

TEST_CASE("pool sizes match the closed-form parameter counts") {
    PromptConfig cfg;  // defaults: length 16, dim 30
    Rng rng(42);
    PromptPool pool(cfg, PromptSchedule{}, rng);
    CHECK(pool.params().at("prompts/ms").tensor.numel() == 3 * 16 * 30);

    for (int t = 1; t <= kNumTasks; ++t) pool.ensure_task(t, rng);
    // 3*l*d shared + 2 keys + 7 per-task pools
    CHECK(pool.params().count_values() == 3 * 16 * 30 + 2 * 30 + 7 * 3 * 16 * 30);
    CHECK(pool.params().count_values() == 11580);
}

TEST_CASE("same seed reproduces the same pool") {
    Rng rng1(1234), rng2(1234);
    PromptPool a(tiny_config(), PromptSchedule{}, rng1);
    PromptPool b(tiny_config(), PromptSchedule{}, rng2);
    CHECK(a.params().at("prompts/ms").tensor.data() == b.params().at("prompts/ms").tensor.data());
    CHECK(a.key_missing().data() == b.key_missing().data());
}

TEST_CASE("resolved context shares task-aware tensors and separates modality prompts") {
    PromptConfig cfg = tiny_config();
    Rng rng(11);
    PromptSchedule sched;
    sched.modality_layers = {1, 2};
    sched.task_aware_layers = {3, 4};
    sched.task_specific_layers = {5};
    PromptPool pool(cfg, sched, rng);
    pool.ensure_task(2, rng);

    const MissingPattern p = pattern_from_task_id(2);
    PromptContext ctx = resolve_prompt_context(pool, sched, p, 6);

    // Modality layers: three distinct per-stream prompts.
    CHECK(max_abs_diff(ctx.per_layer[0][0].data(), ctx.per_layer[1][0].data()) > 1e-9);
    CHECK(max_abs_diff(ctx.per_layer[0][0].data(), ctx.per_layer[2][0].data()) > 1e-9);
    // Task-aware layers: the same node feeds all three streams.
    CHECK(ctx.per_layer[0][2].node() == ctx.per_layer[1][2].node());
    CHECK(ctx.per_layer[1][2].node() == ctx.per_layer[2][2].node());
    // Unscheduled layers carry nothing.
    CHECK_FALSE(ctx.per_layer[0][5].defined());

    // Same pattern twice gives identical values.
    PromptContext ctx2 = resolve_prompt_context(pool, sched, p, 6);
    CHECK(ctx.per_layer[0][2].data() == ctx2.per_layer[0][2].data());

    // Patterns differing in one modality share the pool but differ in the
    // task-aware tensor.
    PromptContext ctx3 = resolve_prompt_context(pool, sched, pattern_from_task_id(1), 6);
    CHECK(ctx.per_layer[0][0].data() == ctx3.per_layer[0][0].data());
    CHECK(max_abs_diff(ctx.per_layer[0][2].data(), ctx3.per_layer[0][2].data()) > 1e-9);
}

TEST_CASE("missing task entry falls back to zero prompts") {
    PromptConfig cfg = tiny_config();
    Rng rng(13);
    PromptSchedule sched;
    sched.modality_layers = {};
    sched.task_aware_layers = {};
    sched.task_specific_layers = {1};
    PromptPool pool(cfg, sched, rng);

    PromptContext ctx = resolve_prompt_context(pool, sched, pattern_from_task_id(3), 2);
    for (double v : ctx.per_layer[0][0].data()) CHECK(v == 0.0);
}

TEST_CASE("schedule validation rejects overlaps and out-of-range layers") {
    PromptSchedule sched;
    CHECK_NOTHROW(sched.validate(10));
    CHECK_THROWS_AS(sched.validate(7), ConfigError);  // needs layers up to 8
    sched.task_specific_layers = {5, 6, 7};
    CHECK_THROWS_AS(sched.validate(10), ConfigError);  // layer 5 used twice

    PromptSchedule grouped = PromptSchedule::grouped(
        {2, 3, 3},
        {PromptFamily::kTaskAware, PromptFamily::kModality, PromptFamily::kTaskSpecific});
    CHECK(grouped.task_aware_layers == std::vector<int>{1, 2});
    CHECK(grouped.modality_layers == std::vector<int>{3, 4, 5});
    CHECK(grouped.task_specific_layers == std::vector<int>{6, 7, 8});
}

TEST_CASE("per-layer prompt copies are independent parameters") {
    PromptConfig cfg = tiny_config();
    cfg.per_layer_prompts = true;
    Rng rng(17);
    PromptSchedule sched;
    sched.modality_layers = {1, 2};
    sched.task_aware_layers = {3};
    sched.task_specific_layers = {4};
    PromptPool pool(cfg, sched, rng);
    CHECK(pool.params().find("prompts/ms/0") != nullptr);
    CHECK(pool.params().find("prompts/ms/1") != nullptr);
    CHECK(pool.modality_prompt(0, 0).data() != pool.modality_prompt(0, 1).data());
}
