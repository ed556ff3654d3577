"""Learning curves of the perceptron from entropy-energy competition and Gibbs sampling."""

__version__ = "0.1.0"
