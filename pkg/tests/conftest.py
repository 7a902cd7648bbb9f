import numpy as np
import pytest

from modesep.model import INCOHERENT_PHASES, perturbed_p1


def make_counts_csv(
    path,
    alpha,
    beta,
    eps_grid,
    per_phase=50000,
    seed=0,
    noise_rate=0.0,
    corrupt_line=None,
):
    """Synthetic aggregated-counts dataset in the CLI schema."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    lines = ["epsilon_true,phase,control_mode,retrieved_counts,noise_counts"]
    for eps in eps_grid:
        p1 = perturbed_p1(float(eps), alpha, beta)
        for phi in INCOHERENT_PHASES:
            n1 = int(rng.poisson(p1 * per_phase))
            noise0 = int(rng.poisson(noise_rate)) if noise_rate else 0
            noise1 = int(rng.poisson(noise_rate)) if noise_rate else 0
            lines.append(f"{eps:.4f},{phi:.10f},0,{per_phase - n1 + noise0},{noise0}")
            lines.append(f"{eps:.4f},{phi:.10f},1,{n1 + noise1},{noise1}")
    if corrupt_line is not None:
        fields = lines[corrupt_line].split(",")
        fields[3] = "not-a-count"
        lines[corrupt_line] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def counts_csv_factory(tmp_path):
    def factory(name="counts.csv", **kwargs):
        return make_counts_csv(tmp_path / name, **kwargs)

    return factory
