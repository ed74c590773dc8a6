#include "catch_amalgamated.hpp"

#include <cmath>

#include "csvm/sso.hpp"

#include "helpers.hpp"

using namespace csvm;

namespace {

SsoParams small_params(std::size_t n_att, std::size_t n_filter = 2, std::size_t n_var = 2) {
    SsoParams p;
    p.n_sol = 4;
    p.n_filter = n_filter;
    p.n_var = n_var;
    p.n_gen = 10;
    p.svm.kernel = KernelSpec::rbf_default(n_att);
    p.svm.seed = 99;
    return p;
}

Dataset toy_data() { return test::two_moons(24, 3); }

}  // namespace

TEST_CASE("fitness at depth zero equals the baseline accuracy") {
    auto data = toy_data();
    auto params = small_params(2);
    const double f0 = fitness(FilterBank{}, 0, data, params);
    auto model = train_svc(data, params.svm);
    CHECK(f0 == accuracy(model, data));
}

TEST_CASE("identity filter reproduces depth-zero fitness") {
    auto data = toy_data();
    auto params = small_params(2, 1, 2);
    FilterBank identity{{Filter{{1.0, 0.0}}}};
    CHECK(fitness(identity, 1, data, params) == fitness(identity, 0, data, params));
}

TEST_CASE("fitness is a fraction of the record count") {
    auto data = toy_data();
    auto params = small_params(2);
    Rng rng(8);
    FilterBank bank{{Filter{test::random_vector(rng, 2, -2.0, 2.0)},
                     Filter{test::random_vector(rng, 2, -2.0, 2.0)}}};
    const double f = fitness(bank, 2, data, params);
    const double scaled = f * static_cast<double>(data.size());
    CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
}

TEST_CASE("holdout fitness scores the held-out slice") {
    auto data = toy_data();
    auto params = small_params(2);
    params.fitness_mode = FitnessMode::holdout;
    params.holdout_seed = 17;
    const double f = fitness(FilterBank{}, 0, data, params);
    // 24 records -> 20 train, 4 eval; fitness is quarters
    const double scaled = f * 4.0;
    CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
}

TEST_CASE("population initialization") {
    auto data = toy_data();
    auto params = small_params(2);
    SECTION("weights live inside the bound and caches are full") {
        auto pop = init_population(data, params, 42);
        REQUIRE(pop.candidates.size() == params.n_sol);
        for (const auto& cand : pop.candidates) {
            REQUIRE(cand.bank.n_filter() == params.n_filter);
            for (const auto& f : cand.bank.filters)
                for (double w : f.weights) {
                    CHECK(w >= -params.bound);
                    CHECK(w <= params.bound);
                }
            REQUIRE(cand.prefix_fitness.size() == params.n_filter);
            for (double f : cand.prefix_fitness) CHECK(!std::isnan(f));
            // lowest maximizing depth wins
            std::size_t expect = 1;
            for (std::size_t d = 2; d <= params.n_filter; ++d)
                if (cand.prefix_fitness[d - 1] > cand.prefix_fitness[expect - 1]) expect = d;
            CHECK(cand.p_filter == expect);
        }
        for (const auto& cand : pop.candidates)
            CHECK(cand.best_fitness() <= pop.best_fitness());
        CHECK(pop.current == pop.g_best);
    }
    SECTION("singleton population") {
        auto solo = params;
        solo.n_sol = 1;
        solo.n_filter = 1;
        auto pop = init_population(data, solo, 1);
        CHECK(pop.g_best == 0);
        CHECK(pop.candidates[0].p_filter == 1);
    }
    SECTION("bit-identical for a fixed seed") {
        auto a = init_population(data, params, 7);
        auto b = init_population(data, params, 7);
        REQUIRE(a.candidates.size() == b.candidates.size());
        for (std::size_t i = 0; i < a.candidates.size(); ++i) {
            CHECK(a.candidates[i].bank == b.candidates[i].bank);
            CHECK(a.candidates[i].prefix_fitness == b.candidates[i].prefix_fitness);
        }
    }
}

TEST_CASE("solution selection follows the stepwise thresholds") {
    auto data = toy_data();
    auto params = small_params(2);
    auto pop = init_population(data, params, 11);
    Rng rng(5);
    SECTION("all weight on the gBest branch") {
        params.c = {1.0, 0.0, 0.0, 0.0};
        for (int i = 0; i < 20; ++i) {
            auto sel = select_solution(pop, params, rng);
            CHECK(!sel.fresh);
            CHECK(sel.index == pop.g_best);
        }
    }
    SECTION("all weight on the random-index branch") {
        params.c = {0.0, 1.0, 0.0, 0.0};
        bool saw_other = false;
        for (int i = 0; i < 50; ++i) {
            auto sel = select_solution(pop, params, rng);
            CHECK(!sel.fresh);
            CHECK(sel.index < pop.candidates.size());
            if (sel.index != pop.g_best) saw_other = true;
            CHECK(pop.current == sel.index);
        }
        CHECK(saw_other);
    }
    SECTION("all weight on the current branch") {
        params.c = {0.0, 0.0, 1.0, 0.0};
        pop.current = 2;
        auto sel = select_solution(pop, params, rng);
        CHECK(!sel.fresh);
        CHECK(sel.index == 2);
    }
    SECTION("all weight on the fresh branch") {
        params.c = {0.0, 0.0, 0.0, 1.0};
        pop.current = 1;
        auto sel = select_solution(pop, params, rng);
        CHECK(sel.fresh);
        CHECK(sel.index == 1);  // competes at the current slot
        CHECK(pop.current == 1);
    }
}

TEST_CASE("proposal edits one weight and redraws deeper filters") {
    auto data = toy_data();
    auto params = small_params(2, 3, 2);
    auto pop = init_population(data, params, 13);

    SECTION("clamping keeps weights inside the bound") {
        Candidate cand = pop.candidates[0];
        cand.p_filter = 1;
        for (auto& f : cand.bank.filters)
            for (auto& w : f.weights) w = 1.999999;
        Rng rng(1);
        auto next = propose_update(cand, params, rng);
        for (const auto& f : next.bank.filters)
            for (double w : f.weights) {
                CHECK(w <= params.bound);
                CHECK(w >= -params.bound);
            }
    }
    SECTION("edit at the last depth changes exactly one weight") {
        Candidate cand = pop.candidates[1];
        cand.p_filter = cand.bank.n_filter();
        // force the filter draw to land on p_filter by making it depth 1
        Candidate shallow = cand;
        shallow.bank.filters.resize(1);
        shallow.prefix_fitness.resize(1);
        shallow.p_filter = 1;
        SsoParams one = params;
        one.n_filter = 1;
        Rng rng(2);
        auto next = propose_update(shallow, one, rng);
        std::size_t diffs = 0;
        for (std::size_t k = 0; k < one.n_var; ++k)
            if (next.bank.filters[0].weights[k] != shallow.bank.filters[0].weights[k])
                ++diffs;
        CHECK(diffs == 1);
    }
    SECTION("edit at depth one redraws deeper filters and keeps no stale cache") {
        Candidate cand = pop.candidates[2];
        cand.p_filter = 1;  // filter draw must pick f = 1
        Rng rng(3);
        auto next = propose_update(cand, params, rng);
        for (std::size_t d = 1; d <= params.n_filter; ++d)
            CHECK(std::isnan(next.prefix_fitness[d - 1]));
    }
    SECTION("cache below the edited depth is kept") {
        Candidate cand = pop.candidates[3];
        cand.p_filter = 3;
        for (int attempt = 0; attempt < 50; ++attempt) {
            Rng rng(100 + attempt);
            auto next = propose_update(cand, params, rng);
            std::size_t f = 1;
            while (f <= 3 && !std::isnan(next.prefix_fitness[f - 1])) ++f;
            // depths below the edit are untouched values from the parent
            for (std::size_t d = 1; d < f; ++d)
                CHECK(next.prefix_fitness[d - 1] == cand.prefix_fitness[d - 1]);
        }
    }
}

TEST_CASE("greedy acceptance") {
    auto data = toy_data();
    auto params = small_params(2);
    auto pop = init_population(data, params, 19);

    SECTION("strictly worse candidates are discarded") {
        Candidate bad = pop.candidates[0];
        for (auto& f : bad.prefix_fitness) f = -1.0;  // pretend terrible, no stale slots
        Candidate before = pop.candidates[0];
        const bool accepted = accept_step(pop, 0, bad, data, params);
        CHECK(!accepted);
        CHECK(pop.candidates[0].bank == before.bank);
    }
    SECTION("equal fitness replaces the incumbent") {
        Candidate twin = pop.candidates[1];
        twin.bank.filters[0].weights[0] =
            twin.bank.filters[0].weights[0] < 0 ? twin.bank.filters[0].weights[0] + 1e-6
                                                : twin.bank.filters[0].weights[0] - 1e-6;
        // fitness values stay as cached: identical best
        const bool accepted = accept_step(pop, 1, twin, data, params);
        CHECK(accepted);
        CHECK(pop.candidates[1].bank == twin.bank);
    }
    SECTION("gBest moves on ties") {
        const std::size_t other = pop.g_best == 0 ? 1 : 0;
        Candidate matched = pop.candidates[other];
        for (auto& f : matched.prefix_fitness) f = pop.best_fitness();
        accept_step(pop, other, matched, data, params);
        CHECK(pop.g_best == other);
    }
    SECTION("stale depths are recomputed before comparison") {
        SsoParams checked = params;
        checked.check_cache = true;
        Candidate cand = pop.candidates[2];
        Rng rng(4);
        auto prop = propose_update(cand, checked, rng);
        accept_step(pop, 2, prop, data, checked);  // check_cache validates the reuse
        for (double f : pop.candidates[2].prefix_fitness) CHECK(!std::isnan(f));
        std::size_t expect = 1;
        for (std::size_t d = 2; d <= params.n_filter; ++d)
            if (pop.candidates[2].prefix_fitness[d - 1] >
                pop.candidates[2].prefix_fitness[expect - 1])
                expect = d;
        CHECK(pop.candidates[2].p_filter == expect);
    }
}

TEST_CASE("full training run") {
    auto data = toy_data();
    auto params = small_params(2);
    params.n_gen = 12;

    SECTION("zero generations returns the best of initialization") {
        auto zero = params;
        zero.n_gen = 0;
        auto model = train(data, zero, 21);
        auto pop = init_population(data, params, 21);
        CHECK(model.fitness == pop.best_fitness());
        CHECK(model.earliest_gen == 0);
    }
    SECTION("gBest fitness is nondecreasing across checkpoints") {
        auto model = train(data, params, 23, {1, 3, 6, 12});
        REQUIRE(model.checkpoints.size() == 4);
        for (std::size_t i = 1; i < model.checkpoints.size(); ++i)
            CHECK(model.checkpoints[i].phi >= model.checkpoints[i - 1].phi);
        CHECK(model.fitness == model.checkpoints.back().phi);
    }
    SECTION("identical seeds give identical models") {
        auto a = train(data, params, 31, {6, 12});
        auto b = train(data, params, 31, {6, 12});
        CHECK(a.bank == b.bank);
        CHECK(a.fitness == b.fitness);
        CHECK(a.depth == b.depth);
        CHECK(a.best_count == b.best_count);
        REQUIRE(a.checkpoints.size() == b.checkpoints.size());
        for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
            CHECK(a.checkpoints[i].phi == b.checkpoints[i].phi);
            CHECK(a.checkpoints[i].earliest_gen == b.checkpoints[i].earliest_gen);
        }
    }
    SECTION("weights stay bounded and the cache stays sound over a long run") {
        auto strict = params;
        strict.check_cache = true;
        strict.n_gen = 30;
        auto model = train(data, strict, 37, {30});
        for (const auto& f : model.bank.filters)
            for (double w : f.weights) {
                CHECK(w >= -params.bound);
                CHECK(w <= params.bound);
            }
        CHECK(model.depth == model.bank.n_filter());
        CHECK(model.fitness == model.checkpoints.back().phi);
    }
    SECTION("reported fitness is the max over depths") {
        auto model = train(data, params, 41, {12});
        // the reported bank is truncated to its best depth
        CHECK(model.bank.n_filter() == model.depth);
        CHECK(model.depth >= 1);
        CHECK(model.depth <= params.n_filter);
        // and scoring the bank at that depth reproduces the fitness
        CHECK(fitness(model.bank, model.depth, data, params) == model.fitness);
    }
    SECTION("trained model serialization round-trip") {
        auto model = train(data, params, 43, {12});
        auto j = trained_model_to_json(model);
        auto back = trained_model_from_json(j);
        CHECK(back.bank == model.bank);
        CHECK(back.depth == model.depth);
        CHECK(back.fitness == model.fitness);
        CHECK(back.svm == model.svm);
    }
    SECTION("checkpoint validation") {
        CHECK_THROWS_AS(train(data, params, 1, {5, 5}), data_error);
        CHECK_THROWS_AS(train(data, params, 1, {0, 5}), data_error);
        CHECK_THROWS_AS(train(data, params, 1, {50}), data_error);
    }
}

TEST_CASE("invalid parameters are rejected") {
    SsoParams p = small_params(2);
    SECTION("probabilities must sum to one") {
        p.c = {0.5, 0.5, 0.5, 0.5};
        CHECK_THROWS_AS(p.validate(), data_error);
    }
    SECTION("negative probability") {
        p.c = {1.2, -0.2, 0.0, 0.0};
        CHECK_THROWS_AS(p.validate(), data_error);
    }
    SECTION("step interval must be ordered") {
        p.step_low = 0.5;
        p.step_high = 0.1;
        CHECK_THROWS_AS(p.validate(), data_error);
    }
}
