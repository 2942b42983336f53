#!/usr/bin/env python3
# Toy training loop for the external executor. Reads hyperparameters from
# the file the tuner passes, "trains" for a few epochs and reports the
# validation loss on stdout using the metric protocol.
import json
import math
import sys

with open(sys.argv[1]) as f:
    hp = json.load(f)

lr = hp["learning_rate"]
layers = hp["layers"]
penalty = {"sgd": 0.3, "adam": 0.0, "rmsprop": 0.1}[hp["optimizer"]]

best = (math.log10(lr) + 2.5) ** 2 + 0.05 * (layers - 4) ** 2 + penalty
for epoch in range(1, 11):
    loss = best + 2.0 * math.exp(-epoch / 3.0)
    print("tuner-metric name=val_loss iteration=%d value=%r" % (epoch, loss), flush=True)
