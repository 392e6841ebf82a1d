#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "mgilc/parallel.hpp"

using namespace mgilc;

TEST_CASE("every index runs exactly once") {
    for (std::size_t workers : {1u, 2u, 7u, 64u}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("lowest failing index is rethrown after all work finishes") {
    std::atomic<int> done{0};
    std::string what;
    try {
        parallel_for(50, 4, [&](std::size_t i) {
            done++;
            if (i == 31 || i == 12) throw std::runtime_error("job " + std::to_string(i));
        });
    } catch (const std::runtime_error& e) {
        what = e.what();
    }
    CHECK(what == "job 12");
    CHECK(done.load() == 50);
}

TEST_CASE("worker count honours the thread cap") {
    unsetenv("MULTIGRID_ILC_THREADS");
    CHECK(worker_count(5) == 5);
    CHECK(worker_count(0) == std::max(1u, std::thread::hardware_concurrency()));
    setenv("MULTIGRID_ILC_THREADS", "2", 1);
    CHECK(worker_count(5) == 2);
    CHECK(worker_count(1) == 1);
    CHECK(worker_count(0) <= 2);
    setenv("MULTIGRID_ILC_THREADS", "junk", 1);
    CHECK(worker_count(3) == 3);
    unsetenv("MULTIGRID_ILC_THREADS");
}
