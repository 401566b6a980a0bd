from . import drift, mimicry, random_circuits, trotter, unseen_pauli, vqe

RUNNERS = {
    "random": random_circuits.run,
    "trotter": trotter.run,
    "unseen_pauli": unseen_pauli.run,
    "vqe": vqe.run,
    "mimicry": mimicry.run,
    "drift": drift.run,
}
