//! Doctest shim for the user guide (populated with the book).
