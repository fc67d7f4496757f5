"""k-mer tokenized transformer for SNP genotype-to-phenotype prediction."""

__version__ = "0.1.0"
