extern int GlobVar; // shared from C2
extern bool FA; // Feature variable
extern bool FB; // Feature variable
// ...
class A {
    int x = 0;

    int updateX() {
        if (FA) {
            x = GlobVar * 2;

            if (FB) {
                x++;
            } else { // !FB
                x = (++GlobVar) * 2;
            } // FB
        } // FA
        return x;
    }
};
