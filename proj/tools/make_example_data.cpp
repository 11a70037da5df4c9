// Writes the bundled example datasets under data/.
#include "drlogit/report_io.hpp"
#include "drlogit/sim_harness.hpp"

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data";
    struct Item {
        const char* scenario;
        int n;
        std::uint64_t seed;
        const char* file;
    };
    const Item items[] = {
        {"S1b0-bin", 2000, 7, "binary_beta0.csv"},
        {"S1-gauss", 2000, 11, "gaussian_beta05.csv"},
    };
    for (const auto& it : items) {
        const auto& sc = drlogit::find_scenario(it.scenario);
        drlogit::write_csv_file(drlogit::sample(sc.law, it.n, it.seed), dir + "/" + it.file);
        std::cout << "wrote " << dir << "/" << it.file << " (" << it.scenario << ", n = " << it.n
                  << ", seed = " << it.seed << ")\n";
    }
    return 0;
}
