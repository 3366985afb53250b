#include <catch_amalgamated.hpp>

#include "crbf/init.hpp"
#include "crbf/network.hpp"
#include "crbf/rng.hpp"
#include "crbf/training.hpp"

using namespace crbf;

namespace {

Network small_deep_net(std::uint64_t seed) {
    RngStream rng(seed);
    Network net = make_network(3, {4, 2}, 2);
    InitConfig icfg;
    init_proposed(net, icfg, rng);
    return net;
}

ComplexVector random_cvec(std::size_t n, double var, RngStream& rng) {
    ComplexVector v(n);
    for (auto& z : v) z = rng.complex_gaussian(var);
    return v;
}

bool layers_equal(const Layer& a, const Layer& b) {
    return a.W.data() == b.W.data() && a.b == b.b && a.Gamma.data() == b.Gamma.data() &&
           a.sigma == b.sigma;
}

} // namespace

TEST_CASE("compute_beta is phi over sigma") {
    Layer layer(2, 1, 1);
    layer.Gamma(0, 0) = cplx{0.0, 0.0};
    layer.Gamma(1, 0) = cplx{1.0, 0.0};
    layer.sigma = {2.0, 0.5};
    layer.W(0, 0) = cplx{1.0, 0.0};
    layer.W(0, 1) = cplx{1.0, 0.0};
    layer_forward(layer, {cplx{1.0, 0.0}});
    const RealVector beta = compute_beta(layer);
    CHECK(beta[0] == Catch::Approx(std::exp(-0.5) / 2.0));
    CHECK(beta[1] == Catch::Approx(1.0 / 0.5));

    Layer stale(2, 1, 1);
    CHECK_THROWS_AS(compute_beta(stale), std::logic_error);
}

TEST_CASE("compute_delta hand cases") {
    Layer layer(2, 1, 1);
    layer.W(0, 0) = cplx{2.0, 0.0};
    layer.W(0, 1) = cplx{0.0, 3.0};
    layer.cache_valid = true;

    // real psi only touches Re(W); imaginary psi only Im(W)
    RealVector beta = {1.0, 1.0};
    RealVector d = compute_delta(layer, {cplx{1.0, 0.0}}, beta);
    CHECK(d[0] == -2.0);
    CHECK(d[1] == 0.0);
    d = compute_delta(layer, {cplx{0.0, 1.0}}, beta);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == -3.0);

    // beta scales per neuron
    beta = {0.5, 2.0};
    d = compute_delta(layer, {cplx{1.0, 1.0}}, beta);
    CHECK(d[0] == Catch::Approx(-1.0));
    CHECK(d[1] == Catch::Approx(-6.0));

    CHECK_THROWS_AS(compute_delta(layer, ComplexVector(2), beta), std::invalid_argument);
}

TEST_CASE("compute_psi_top is the error vector") {
    Layer layer(1, 1, 2);
    layer.output = {cplx{0.5, 0.5}, cplx{-1.0, 0.0}};
    layer.cache_valid = true;
    const ComplexVector d = {cplx{1.0, 0.0}, cplx{-1.0, 2.0}};
    const ComplexVector psi = compute_psi_top(layer, d);
    CHECK(psi[0] == cplx{0.5, -0.5});
    CHECK(psi[1] == cplx{0.0, 2.0});
    // d == y gives psi = 0
    const ComplexVector zero = compute_psi_top(layer, layer.output);
    CHECK(zero[0] == cplx{0.0, 0.0});
    CHECK(zero[1] == cplx{0.0, 0.0});
}

TEST_CASE("compute_psi_hidden hand case") {
    Layer next(2, 2, 1);
    next.Gamma(0, 0) = cplx{1.0, 0.0};
    next.Gamma(0, 1) = cplx{0.0, 1.0};
    next.Gamma(1, 0) = cplx{0.0, 0.0};
    next.Gamma(1, 1) = cplx{2.0, 0.0};
    next.input = {cplx{3.0, 0.0}, cplx{0.0, 0.0}};
    next.cache_valid = true;

    const RealVector delta = {0.5, -1.0};
    const ComplexVector psi = compute_psi_hidden(next, delta);
    // psi_p = sum_m delta_m (y_p - gamma_mp)
    CHECK(psi[0] == cplx{0.5 * 2.0 - 1.0 * 3.0, 0.0});
    CHECK(psi[1] == cplx{-1.0 * (-2.0), 0.5 * (-1.0)});

    const ComplexVector zero = compute_psi_hidden(next, {0.0, 0.0});
    CHECK(zero[0] == cplx{0.0, 0.0});
    CHECK(zero[1] == cplx{0.0, 0.0});
}

TEST_CASE("zero rates leave parameters bit-unchanged") {
    Network net = small_deep_net(10);
    RngStream rng(11);
    const ComplexVector x = random_cvec(3, 1.0 / 6.0, rng);
    const ComplexVector d = random_cvec(2, 0.25, rng);
    const Network before = net;
    network_forward(net, x);
    backward_and_update(net, d, {LayerRates{}, LayerRates{}});
    for (std::size_t l = 0; l < net.depth(); ++l)
        CHECK(layers_equal(net.layers[l], before.layers[l]));
}

TEST_CASE("e = 0 is a fixed point of the update") {
    Network net = small_deep_net(12);
    RngStream rng(13);
    const ComplexVector x = random_cvec(3, 1.0 / 6.0, rng);
    const ComplexVector y = network_forward(net, x); // train toward the network's own output
    const Network before = net;
    network_forward(net, x);
    const std::vector<LayerRates> rates(2, LayerRates{0.1, 0.1, 0.4, 0.2});
    const double J = backward_and_update(net, y, rates);
    CHECK(J == 0.0);
    for (std::size_t l = 0; l < net.depth(); ++l)
        CHECK(layers_equal(net.layers[l], before.layers[l]));
}

TEST_CASE("a small update step decreases the cost") {
    Network net = small_deep_net(14);
    RngStream rng(15);
    for (int trial = 0; trial < 10; ++trial) {
        const ComplexVector x = random_cvec(3, 1.0 / 6.0, rng);
        const ComplexVector d = random_cvec(2, 0.25, rng);
        network_forward(net, x);
        const std::vector<LayerRates> rates(2, LayerRates{0.01, 0.01, 0.01, 0.01});
        const double j_before = backward_and_update(net, d, rates);
        const double j_after = cost(d, network_forward(net, x));
        CHECK(j_after < j_before);
    }
}

TEST_CASE("shallow and deep update paths agree to 1e-12") {
    RngStream rng(16);
    Network net = make_network(4, {8}, 3);
    InitConfig icfg;
    init_proposed(net, icfg, rng);
    const std::vector<LayerRates> rates = {{0.1, 0.1, 0.4, 0.2}};

    for (int trial = 0; trial < 20; ++trial) {
        const ComplexVector x = random_cvec(4, 0.125, rng);
        const ComplexVector d = random_cvec(3, 1.0 / 6.0, rng);

        Layer shallow = net.layers[0];
        layer_forward(shallow, x);
        shallow_update(shallow, d, rates[0]);

        network_forward(net, x);
        backward_and_update(net, d, rates);
        const Layer& deep = net.layers[0];

        auto close = [](cplx a, cplx b) {
            return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
        };
        for (std::size_t i = 0; i < deep.W.size(); ++i)
            REQUIRE(close(shallow.W.data()[i], deep.W.data()[i]));
        for (std::size_t i = 0; i < deep.b.size(); ++i)
            REQUIRE(close(shallow.b[i], deep.b[i]));
        for (std::size_t i = 0; i < deep.Gamma.size(); ++i)
            REQUIRE(close(shallow.Gamma.data()[i], deep.Gamma.data()[i]));
        for (std::size_t i = 0; i < deep.sigma.size(); ++i)
            REQUIRE(std::abs(shallow.sigma[i] - deep.sigma[i]) <= 1e-12 * deep.sigma[i]);
    }
}

TEST_CASE("sigma stays at or above the floor") {
    Layer layer(1, 1, 1);
    layer.Gamma(0, 0) = cplx{0.0, 0.0};
    layer.sigma[0] = 1e-5;
    layer.W(0, 0) = cplx{1.0, 0.0};
    layer_forward(layer, {cplx{0.1, 0.0}});
    // large positive delta drives sigma down through the floor
    const std::size_t clamped = update_layer(layer, {cplx{0.0, 0.0}}, {100.0}, {0, 0, 0, 1.0});
    CHECK(clamped == 1);
    CHECK(layer.sigma[0] == kSigmaFloor);
    CHECK(layer.sigma[0] > 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
    Network net = small_deep_net(17);
    RngStream rng(18);
    const ComplexVector x = random_cvec(3, 1.0 / 6.0, rng);
    const ComplexVector d = random_cvec(2, 0.25, rng);
    network_forward(net, x);
    BackwardState state;
    compute_backward_state(net, d, state);

    // spot-check every kind on both layers
    const std::vector<ParamCoord> coords = {
        {0, ParamKind::Weight, 2, false}, {0, ParamKind::Weight, 5, true},
        {0, ParamKind::Bias, 1, false},   {0, ParamKind::Bias, 0, true},
        {0, ParamKind::Center, 7, false}, {0, ParamKind::Center, 4, true},
        {0, ParamKind::Variance, 0, false},
        {1, ParamKind::Weight, 1, false}, {1, ParamKind::Weight, 3, true},
        {1, ParamKind::Bias, 0, false},   {1, ParamKind::Bias, 1, true},
        {1, ParamKind::Center, 2, false}, {1, ParamKind::Center, 3, true},
        {1, ParamKind::Variance, 1, false}};
    for (const auto& c : coords) {
        const double analytic = analytic_gradient(net, state, c);
        const double fd = fd_gradient(net, x, d, c);
        network_forward(net, x);
        if (std::abs(fd) < 1e-6)
            CHECK(std::abs(analytic - fd) < 1e-9);
        else
            CHECK(std::abs(analytic - fd) / std::abs(fd) < 1e-6);
    }
}

TEST_CASE("fd_gradient vanishes at a perfect fit") {
    Network net = small_deep_net(19);
    RngStream rng(20);
    const ComplexVector x = random_cvec(3, 1.0 / 6.0, rng);
    const ComplexVector d = network_forward(net, x);
    const ParamCoord c{0, ParamKind::Weight, 0, false};
    // cost is quadratic around the minimum, so the central difference is tiny
    CHECK(std::abs(fd_gradient(net, x, d, c)) < 1e-8);
}

TEST_CASE("fd_gradient restores the perturbed parameter") {
    Network net = small_deep_net(21);
    RngStream rng(22);
    const ComplexVector x = random_cvec(3, 1.0 / 6.0, rng);
    const ComplexVector d = random_cvec(2, 0.25, rng);
    const double before = net.layers[1].sigma[0];
    fd_gradient(net, x, d, {1, ParamKind::Variance, 0, false});
    CHECK(net.layers[1].sigma[0] == before);
    CHECK_THROWS_AS(fd_gradient(net, x, d, {0, ParamKind::Weight, 0, false}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("param_component bounds and kinds") {
    Network net = small_deep_net(23);
    CHECK_THROWS_AS(param_component(net, {5, ParamKind::Weight, 0, false}),
                    std::invalid_argument);
    CHECK_THROWS_AS(param_component(net, {0, ParamKind::Weight, 10000, false}),
                    std::invalid_argument);
    CHECK_THROWS_AS(param_component(net, {0, ParamKind::Variance, 0, true}),
                    std::invalid_argument);
    const double* s = param_component(net, {0, ParamKind::Variance, 2, false});
    CHECK(*s == net.layers[0].sigma[2]);
    const double* wre = param_component(net, {0, ParamKind::Weight, 3, false});
    const double* wim = param_component(net, {0, ParamKind::Weight, 3, true});
    CHECK(*wre == net.layers[0].W.data()[3].real());
    CHECK(*wim == net.layers[0].W.data()[3].imag());
}

TEST_CASE("mse_db") {
    CHECK(mse_db(1.0) == 0.0);
    CHECK(mse_db(0.1) == Catch::Approx(-10.0));
    CHECK(mse_db(100.0) == Catch::Approx(20.0));
    CHECK(mse_db(0.0) == -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(mse_db(-0.5), std::invalid_argument);
}

TEST_CASE("train_epoch with zero rates never changes the metrics") {
    RngStream rng(24);
    Network net = make_network(4, {8}, 2);
    InitConfig icfg;
    init_proposed(net, icfg, rng);

    NormalizedDataset train, val;
    for (int i = 0; i < 32; ++i) {
        train.inputs.push_back(random_cvec(4, 0.125, rng));
        train.targets.push_back(random_cvec(2, 0.25, rng));
        train.targets_raw.push_back(train.targets.back());
    }
    val = train;

    const std::vector<LayerRates> rates(1);
    RngStream shuffle_rng(1);
    BackwardState state;
    state.resize(net);
    // fixed order keeps the floating-point accumulation identical too
    const EpochMetrics m1 =
        train_epoch(net, train, val, rates, false, shuffle_rng, state, 0);
    const EpochMetrics m2 =
        train_epoch(net, train, val, rates, false, shuffle_rng, state, 1);
    CHECK(m1.train_mse == m2.train_mse);
    CHECK(m1.val_mse == m2.val_mse);
    CHECK(m1.val_mse == evaluate_mse(net, val));
}

TEST_CASE("training is deterministic for a fixed shuffle seed") {
    auto run = [] {
        RngStream rng(25);
        Network net = make_network(4, {8}, 2);
        InitConfig icfg;
        init_proposed(net, icfg, rng);
        NormalizedDataset train;
        for (int i = 0; i < 64; ++i) {
            train.inputs.push_back(random_cvec(4, 0.125, rng));
            train.targets.push_back(random_cvec(2, 0.25, rng));
            train.targets_raw.push_back(train.targets.back());
        }
        const std::vector<LayerRates> rates = {{0.1, 0.1, 0.4, 0.2}};
        RngStream shuffle_rng(99);
        BackwardState state;
        state.resize(net);
        std::vector<double> curve;
        for (std::size_t e = 0; e < 5; ++e)
            curve.push_back(
                train_epoch(net, train, train, rates, true, shuffle_rng, state, e).val_mse);
        return curve;
    };
    CHECK(run() == run());
}
