int GlobVar = 0; // shared global
extern bool FB; // Feature variable

int foo() {
    // ...
    if (FB) {
        return GlobVar;
    }
}
int bar() {
    // ...
    if (GlobVar > 20) {
        return foo();
    }
}
