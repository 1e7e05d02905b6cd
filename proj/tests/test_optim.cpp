#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "promptstream/checkpoint.hpp"
#include "promptstream/errors.hpp"
#include "promptstream/optim.hpp"

using namespace promptstream;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("adam first step moves by roughly lr") {
    ParameterSet set;
    Parameter& p = set.add("w", Tensor::from_data({}, {1.0}, true));
    Adam opt({&p}, AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    ops::sum_all(p.tensor).backward();  // grad = 1
    opt.step();
    // Bias correction makes the first update magnitude lr/(1 + eps').
    CHECK(p.tensor.value() == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
    CHECK(opt.step_count() == 1);
    CHECK(p.tensor.grad()[0] == 0.0);  // gradients zeroed after the step
}

TEST_CASE("frozen parameters are untouched bit for bit") {
    ParameterSet set;
    Parameter& train = set.add("a", Tensor::from_data({2}, {1.0, 2.0}), true);
    Parameter& frozen = set.add("b", Tensor::from_data({2}, {3.0, 4.0}), false);
    const std::vector<double> before = frozen.tensor.data();

    Adam opt({&train, &frozen}, AdamConfig{});
    ops::sum_all(ops::add(train.tensor, frozen.tensor)).backward();
    opt.step();
    CHECK(frozen.tensor.data() == before);
    CHECK(train.tensor.data() != std::vector<double>{1.0, 2.0});
}

TEST_CASE("zero gradient leaves a parameter exactly unchanged while moments are zero") {
    ParameterSet set;
    Parameter& p = set.add("w", Tensor::from_data({3}, {1.0, -2.0, 0.5}, true));
    p.tensor.zero_grad();  // allocates an all-zero grad
    ops::scale(ops::sum_all(p.tensor), 0.0).backward();
    Adam opt({&p}, AdamConfig{});
    opt.step();
    CHECK(p.tensor.data() == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("missing gradient on a trainable parameter is a contract error") {
    ParameterSet set;
    Parameter& p = set.add("w", Tensor::from_data({1}, {1.0}, true));
    Adam opt({&p}, AdamConfig{});
    CHECK_THROWS_AS(opt.step(), ContractError);
}

TEST_CASE("adam matches a hand-rolled reference over several steps") {
    ParameterSet set;
    Parameter& p = set.add("w", Tensor::from_data({1}, {0.7}, true));
    Adam opt({&p}, AdamConfig{0.01, 0.9, 0.999, 1e-8});

    double w = 0.7, m = 0.0, v = 0.0;
    for (int t = 1; t <= 25; ++t) {
        // loss = 0.5 w^2, grad = w
        const double g = w;
        ops::scale(ops::sum_all(ops::elementwise_mul(p.tensor, p.tensor)), 0.5).backward();
        opt.step();
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mhat = m / (1.0 - std::pow(0.9, t));
        const double vhat = v / (1.0 - std::pow(0.999, t));
        w -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
        CHECK(p.tensor.value() == doctest::Approx(w).epsilon(1e-12));
    }
}

TEST_CASE("duplicate parameter ids are rejected") {
    ParameterSet set;
    set.add("w", Tensor::from_data({1}, {1.0}));
    CHECK_THROWS_AS(set.add("w", Tensor::from_data({1}, {2.0})), ContractError);
}

TEST_CASE("checkpoint round-trips bit-identical values") {
    std::mt19937_64 rng(31);
    ParameterSet set;
    set.add("alpha/w", oracles::random_tensor({4, 3}, rng, true, -100.0, 100.0));
    set.add("alpha/b", oracles::random_tensor({3}, rng));
    set.add("beta", Tensor::from_data({2}, {1.0 / 3.0, 1e-17}));

    const std::string path = temp_path("ps_ckpt_test.psv");
    checkpoint::save(set, path);

    ParameterSet loaded;
    loaded.add("alpha/w", Tensor::zeros({4, 3}));
    loaded.add("alpha/b", Tensor::zeros({3}));
    loaded.add("beta", Tensor::zeros({2}));
    checkpoint::load_into(loaded, path);
    for (size_t i = 0; i < set.size(); ++i) {
        CHECK(loaded.items()[i].tensor.data() == set.items()[i].tensor.data());
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects bad magic and shape mismatches") {
    const std::string path = temp_path("ps_ckpt_bad.psv");
    {
        std::ofstream out(path);
        out << "NOPE\n0\n";
    }
    ParameterSet set;
    CHECK_THROWS_AS(checkpoint::load_into(set, path), IoError);

    ParameterSet a;
    a.add("w", Tensor::zeros({2, 2}));
    checkpoint::save(a, path);
    ParameterSet b;
    b.add("w", Tensor::zeros({4}));
    CHECK_THROWS_AS(checkpoint::load_into(b, path), IoError);
    std::filesystem::remove(path);
}
