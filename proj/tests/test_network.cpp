#include <catch_amalgamated.hpp>

#include "crbf/init.hpp"
#include "crbf/network.hpp"
#include "crbf/rng.hpp"

using namespace crbf;

TEST_CASE("kernel anchors") {
    CHECK(kernel(0.0) == 1.0);
    CHECK(kernel(0.0) - kernel(3.0) == Catch::Approx(0.950212931632).epsilon(1e-10));
    CHECK(kernel(10.0) == Catch::Approx(4.539992976248e-5).epsilon(1e-10));
    // clamp keeps huge inputs finite and positive
    CHECK(kernel(1e308) == kernel(kKernelInputMax));
    CHECK(kernel(kKernelInputMax) > 0.0);
    CHECK(kernel(kKernelInputMax) < 1e-300);
}

TEST_CASE("kernel_input") {
    const ComplexVector y = {cplx{1.0, 1.0}};
    const ComplexVector g = {cplx{0.0, 0.0}};
    CHECK(kernel_input(y, g, 1.0) == 2.0);
    CHECK(kernel_input(y, g, 2.0) == 1.0);
    CHECK(kernel_input(y, y, 0.5) == 0.0);
    CHECK_THROWS_AS(kernel_input(y, g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(kernel_input(y, g, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(kernel_input(y, ComplexVector(2), 1.0), std::invalid_argument);
}

TEST_CASE("layer_forward reduces to the bias when W is zero") {
    Layer layer(3, 2, 2);
    layer.b = {cplx{1.5, -0.5}, cplx{0.0, 2.0}};
    const ComplexVector x = {cplx{0.3, 0.1}, cplx{-0.2, 0.4}};
    const ComplexVector& y = layer_forward(layer, x);
    CHECK(y[0] == layer.b[0]);
    CHECK(y[1] == layer.b[1]);
}

TEST_CASE("layer_forward single neuron at its own center") {
    Layer layer(1, 2, 1);
    layer.Gamma(0, 0) = cplx{0.7, -0.3};
    layer.Gamma(0, 1) = cplx{-0.1, 0.2};
    layer.sigma[0] = 2.0;
    layer.W(0, 0) = cplx{2.0, 1.0};
    const ComplexVector x = {cplx{0.7, -0.3}, cplx{-0.1, 0.2}};
    const ComplexVector& y = layer_forward(layer, x);
    // phi = exp(0) = 1, so y = w
    CHECK(y[0] == cplx{2.0, 1.0});
    CHECK(layer.v[0] == 0.0);
    CHECK(layer.phi[0] == 1.0);
}

TEST_CASE("layer_forward matches a scalar recomputation") {
    Layer layer(2, 2, 1);
    layer.Gamma(0, 0) = cplx{0.2, 0.1};
    layer.Gamma(0, 1) = cplx{-0.3, 0.0};
    layer.Gamma(1, 0) = cplx{0.0, -0.4};
    layer.Gamma(1, 1) = cplx{0.5, 0.2};
    layer.sigma = {0.8, 1.3};
    layer.W(0, 0) = cplx{1.0, -2.0};
    layer.W(0, 1) = cplx{-0.5, 0.7};
    layer.b[0] = cplx{0.1, 0.2};
    const ComplexVector x = {cplx{0.4, -0.1}, cplx{0.0, 0.3}};

    double v0 = 0.0, v1 = 0.0;
    for (std::size_t p = 0; p < 2; ++p) {
        v0 += std::norm(x[p] - layer.Gamma(0, p));
        v1 += std::norm(x[p] - layer.Gamma(1, p));
    }
    v0 /= layer.sigma[0];
    v1 /= layer.sigma[1];
    const cplx expect =
        layer.b[0] + layer.W(0, 0) * std::exp(-v0) + layer.W(0, 1) * std::exp(-v1);

    const ComplexVector& y = layer_forward(layer, x);
    CHECK(std::abs(y[0] - expect) < 1e-15);
    CHECK(layer.phi[0] > 0.0);
    CHECK(layer.phi[0] <= 1.0);
    CHECK(layer.phi[1] > 0.0);
    CHECK(layer.phi[1] <= 1.0);
    CHECK(layer.cache_valid);
}

TEST_CASE("kernel outputs stay in (0, 1] over random layers") {
    RngStream rng(3);
    Layer layer(16, 8, 4);
    layer.Gamma = cg_sample(16, 8, 0.5, rng);
    layer.W = cg_sample(4, 16, 1.0, rng);
    for (auto& s : layer.sigma) s = 0.25 + rng.uniform01();
    for (int trial = 0; trial < 50; ++trial) {
        ComplexVector x(8);
        for (auto& z : x) z = rng.complex_gaussian(1.0);
        layer_forward(layer, x);
        for (double phi : layer.phi) {
            CHECK(phi > 0.0);
            CHECK(phi <= 1.0);
        }
    }
}

TEST_CASE("kernel values are translation invariant") {
    RngStream rng(4);
    Layer layer(8, 5, 3);
    layer.Gamma = cg_sample(8, 5, 1.0, rng);
    layer.W = cg_sample(3, 8, 1.0, rng);
    ComplexVector x(5);
    for (auto& z : x) z = rng.complex_gaussian(1.0);

    layer_forward(layer, x);
    const RealVector phi_before = layer.phi;

    const cplx shift{0.37, -1.2};
    for (auto& z : layer.Gamma.data()) z += shift;
    for (auto& z : x) z += shift;
    layer_forward(layer, x);
    for (std::size_t m = 0; m < phi_before.size(); ++m)
        CHECK(std::abs(layer.phi[m] - phi_before[m]) <= 1e-12 * phi_before[m]);
}

TEST_CASE("network_forward with one layer equals layer_forward") {
    RngStream rng(5);
    Network net = make_network(4, {6}, 2);
    InitConfig icfg;
    init_proposed(net, icfg, rng);
    ComplexVector x(4);
    for (auto& z : x) z = rng.complex_gaussian(0.125);

    Layer copy = net.layers[0];
    const ComplexVector direct = layer_forward(copy, x);
    const ComplexVector& chained = network_forward(net, x);
    REQUIRE(direct.size() == chained.size());
    for (std::size_t r = 0; r < direct.size(); ++r) CHECK(direct[r] == chained[r]);
}

TEST_CASE("network_forward is pure: repeated evaluation is bit-identical") {
    RngStream rng(6);
    Network net = make_network(4, {5, 3}, 2);
    InitConfig icfg;
    init_proposed(net, icfg, rng);
    ComplexVector x(4);
    for (auto& z : x) z = rng.complex_gaussian(0.125);
    const ComplexVector y1 = network_forward(net, x);
    const ComplexVector y2 = network_forward(net, x);
    CHECK(y1 == y2);
}

TEST_CASE("two-layer network_forward matches manual composition") {
    RngStream rng(7);
    Network net = make_network(3, {4, 2}, 2);
    InitConfig icfg;
    init_proposed(net, icfg, rng);
    ComplexVector x(3);
    for (auto& z : x) z = rng.complex_gaussian(1.0 / 6.0);

    Layer l0 = net.layers[0];
    Layer l1 = net.layers[1];
    const ComplexVector mid = layer_forward(l0, x);
    const ComplexVector manual = layer_forward(l1, mid);
    const ComplexVector& chained = network_forward(net, x);
    for (std::size_t r = 0; r < manual.size(); ++r) CHECK(manual[r] == chained[r]);
}

TEST_CASE("shape validation") {
    CHECK_THROWS_AS(make_network(4, {}, 2), std::invalid_argument);
    Network net = make_network(4, {6}, 2);
    CHECK_NOTHROW(net.check_shapes());
    net.layers[0].sigma[2] = 0.0;
    CHECK_THROWS_AS(net.check_shapes(), std::invalid_argument);
    net.layers[0].sigma[2] = 1.0;
    net.P = 5;
    CHECK_THROWS_AS(net.check_shapes(), std::invalid_argument);
    net.P = 4;
    CHECK_THROWS_AS(network_forward(net, ComplexVector(3)), std::invalid_argument);

    Network deep = make_network(4, {6, 3}, 2);
    deep.layers[1] = Layer(3, 7, 2); // break the chain
    CHECK_THROWS_AS(deep.check_shapes(), std::invalid_argument);
}

TEST_CASE("cost") {
    const ComplexVector d = {cplx{1.0, 1.0}};
    const ComplexVector zero = {cplx{0.0, 0.0}};
    CHECK(cost(d, zero) == 1.0);
    CHECK(cost(d, d) == 0.0);
    const ComplexVector d2 = {cplx{1.0, 0.0}, cplx{0.0, 2.0}};
    const ComplexVector y2 = {cplx{0.0, 0.0}, cplx{0.0, 0.0}};
    CHECK(cost(d2, y2) == Catch::Approx(2.5));
    CHECK_THROWS_AS(cost(d, y2), std::invalid_argument);
}

TEST_CASE("normalization round trip at sample level") {
    NormStats s;
    s.mode = NormStats::Mode::Symmetric;
    s.mean = cplx{0.3, -0.7};
    s.variance = 2.5;
    s.scale = 0.176776695297; // sqrt(1/32)
    const cplx z{1.25, -3.5};
    const cplx back = denormalize_sample(normalize_sample(z, s), s);
    CHECK(std::abs(back - z) <= 1e-12 * std::abs(z));

    NormStats a;
    a.mode = NormStats::Mode::Asymmetric;
    a.mean_re = 0.1;
    a.mean_im = -0.2;
    a.var_re = 0.5;
    a.var_im = 3.0;
    a.scale = 0.25;
    const cplx back2 = denormalize_sample(normalize_sample(z, a), a);
    CHECK(std::abs(back2 - z) <= 1e-12 * std::abs(z));
}
